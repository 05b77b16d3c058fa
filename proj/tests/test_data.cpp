// Copyright 2026 The qipkit Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qip/data.hpp"

namespace {

std::string be32(std::uint32_t v) {
    std::string out(4, '\0');
    out[0] = static_cast<char>((v >> 24) & 0xff);
    out[1] = static_cast<char>((v >> 16) & 0xff);
    out[2] = static_cast<char>((v >> 8) & 0xff);
    out[3] = static_cast<char>(v & 0xff);
    return out;
}

struct temp_file {
    std::string path;
    explicit temp_file(std::string p, const std::string& contents) : path(std::move(p)) {
        qip::atomic_write_file(path, contents);
    }
    ~temp_file() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("gaussian blob generation") {
    qip::synthetic_spec spec;
    spec.n_classes = 3;
    spec.samples_per_class = 5;
    spec.input_dim = 4;
    spec.seed = 11;

    SECTION("shape and class-major labels") {
        const qip::dataset d = qip::generate_blobs(spec);
        REQUIRE(d.x.rows == 15);
        REQUIRE(d.x.cols == 4);
        REQUIRE(d.y.size() == 15);
        for (std::size_t i = 0; i < 15; ++i) {
            REQUIRE(d.y[i] == static_cast<int>(i / 5));
        }
    }

    SECTION("zero noise collapses each class onto its center") {
        qip::synthetic_spec tight = spec;
        tight.noise_sigma = 0.0;
        const qip::dataset d = qip::generate_blobs(tight);
        for (std::size_t i = 1; i < 5; ++i) {
            for (std::size_t t = 0; t < 4; ++t) {
                REQUIRE(d.x(i, t) == d.x(0, t));
            }
        }
        // centers of distinct classes differ
        REQUIRE(d.x(0, 0) != d.x(5, 0));
    }

    SECTION("identical seeds give bitwise identical datasets") {
        const qip::dataset a = qip::generate_blobs(spec);
        const qip::dataset b = qip::generate_blobs(spec);
        REQUIRE(a.x.data == b.x.data);
        REQUIRE(a.y == b.y);
        qip::synthetic_spec other = spec;
        other.seed = 12;
        REQUIRE(qip::generate_blobs(other).x.data != a.x.data);
    }

    SECTION("well-separated blobs are centroid-classifiable") {
        qip::synthetic_spec easy;
        easy.n_classes = 2;
        easy.samples_per_class = 50;
        easy.input_dim = 6;
        easy.center_scale = 10.0;
        easy.noise_sigma = 0.05;
        easy.seed = 3;
        const qip::dataset d = qip::generate_blobs(easy);
        // nearest-centroid oracle: centroids from the samples themselves
        qip::matrix centroids(2, 6);
        for (std::size_t i = 0; i < d.x.rows; ++i) {
            for (std::size_t t = 0; t < 6; ++t) {
                centroids(static_cast<std::size_t>(d.y[i]), t) += d.x(i, t) / 50.0;
            }
        }
        for (std::size_t i = 0; i < d.x.rows; ++i) {
            double best = 1e300;
            int arg = -1;
            for (std::size_t c = 0; c < 2; ++c) {
                double dist = 0.0;
                for (std::size_t t = 0; t < 6; ++t) {
                    const double diff = d.x(i, t) - centroids(c, t);
                    dist += diff * diff;
                }
                if (dist < best) {
                    best = dist;
                    arg = static_cast<int>(c);
                }
            }
            REQUIRE(arg == d.y[i]);
        }
    }

    SECTION("spec validation") {
        qip::synthetic_spec bad = spec;
        bad.n_classes = 1;
        REQUIRE_THROWS_AS(qip::generate_blobs(bad), qip::config_error);
        bad = spec;
        bad.samples_per_class = 0;
        REQUIRE_THROWS_AS(qip::generate_blobs(bad), qip::config_error);
        bad = spec;
        bad.noise_sigma = -0.1;
        REQUIRE_THROWS_AS(qip::generate_blobs(bad), qip::config_error);
        bad = spec;
        bad.center_scale = 0.0;
        REQUIRE_THROWS_AS(qip::generate_blobs(bad), qip::config_error);
    }
}

TEST_CASE("stratified splits") {
    qip::synthetic_spec spec;
    spec.n_classes = 4;
    spec.samples_per_class = 10;
    spec.input_dim = 3;
    spec.seed = 21;
    const qip::dataset d = qip::generate_blobs(spec);

    SECTION("seventy-thirty per class") {
        const qip::split_result s = qip::stratified_split(d, 0.7, 5);
        REQUIRE(s.train.size() == 28);
        REQUIRE(s.test.size() == 12);
        for (int c = 0; c < 4; ++c) {
            const auto count = [c](const qip::dataset& part) {
                std::size_t n = 0;
                for (int y : part.y) {
                    n += y == c ? 1 : 0;
                }
                return n;
            };
            REQUIRE(count(s.train) == 7);
            REQUIRE(count(s.test) == 3);
        }
    }

    SECTION("every row lands in exactly one side") {
        const qip::split_result s = qip::stratified_split(d, 0.7, 5);
        std::multiset<std::vector<double>> seen;
        const auto collect = [&](const qip::dataset& part) {
            for (std::size_t i = 0; i < part.size(); ++i) {
                seen.insert(std::vector<double>(part.x.row(i).begin(), part.x.row(i).end()));
            }
        };
        collect(s.train);
        collect(s.test);
        std::multiset<std::vector<double>> all;
        for (std::size_t i = 0; i < d.size(); ++i) {
            all.insert(std::vector<double>(d.x.row(i).begin(), d.x.row(i).end()));
        }
        REQUIRE(seen == all);
    }

    SECTION("same seed reproduces the split, another seed changes it") {
        const qip::split_result a = qip::stratified_split(d, 0.7, 5);
        const qip::split_result b = qip::stratified_split(d, 0.7, 5);
        REQUIRE(a.train.x.data == b.train.x.data);
        const qip::split_result c = qip::stratified_split(d, 0.7, 6);
        REQUIRE(a.train.x.data != c.train.x.data);
    }

    SECTION("class-disjoint mode holds out whole identities") {
        const qip::split_result s = qip::stratified_split(d, 0.7, 5, true);
        REQUIRE(s.train.size() == 20);
        REQUIRE(s.test.size() == 20);
        for (int y : s.train.y) {
            REQUIRE(y < 2);
        }
        for (int y : s.test.y) {
            REQUIRE(y >= 2);
        }
    }

    SECTION("fraction validation") {
        REQUIRE_THROWS_AS(qip::stratified_split(d, 0.0, 5), std::invalid_argument);
        REQUIRE_THROWS_AS(qip::stratified_split(d, 1.0, 5), std::invalid_argument);
        qip::dataset empty;
        REQUIRE_THROWS_AS(qip::stratified_split(empty, 0.7, 5), std::invalid_argument);
    }
}

TEST_CASE("idx ingestion") {
    // two 2x2 images with hand-picked bytes
    std::string images = be32(0x00000803) + be32(2) + be32(2) + be32(2);
    const unsigned char pixels[8] = {0, 51, 102, 153, 204, 255, 0, 128};
    for (unsigned char p : pixels) {
        images.push_back(static_cast<char>(p));
    }
    std::string labels = be32(0x00000801) + be32(2);
    labels.push_back(7);
    labels.push_back(2);

    SECTION("fixture decodes to exact floats") {
        const temp_file fi("idx_images_ok.bin", images);
        const temp_file fl("idx_labels_ok.bin", labels);
        const qip::dataset d = qip::load_idx(fi.path, fl.path);
        REQUIRE(d.x.rows == 2);
        REQUIRE(d.x.cols == 4);
        REQUIRE(d.y == std::vector<int>{7, 2});
        for (std::size_t i = 0; i < 8; ++i) {
            REQUIRE(d.x.data[i] == static_cast<double>(pixels[i]) / 255.0);
        }
    }

    SECTION("bad magics are distinct errors") {
        const temp_file fi("idx_images_badmagic.bin", be32(0x00000802) + images.substr(4));
        const temp_file fl("idx_labels_ok2.bin", labels);
        try {
            qip::load_idx(fi.path, fl.path);
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::bad_magic);
        }
        const temp_file fi2("idx_images_ok3.bin", images);
        const temp_file fl2("idx_labels_badmagic.bin", be32(0x00000999) + labels.substr(4));
        try {
            qip::load_idx(fi2.path, fl2.path);
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::bad_magic);
        }
    }

    SECTION("truncated pixels are a truncation error") {
        const temp_file fi("idx_images_short.bin", images.substr(0, images.size() - 3));
        const temp_file fl("idx_labels_ok4.bin", labels);
        try {
            qip::load_idx(fi.path, fl.path);
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::truncated);
        }
    }

    SECTION("count disagreement is its own error") {
        std::string labels3 = be32(0x00000801) + be32(3);
        labels3.push_back(7);
        labels3.push_back(2);
        labels3.push_back(1);
        const temp_file fi("idx_images_ok5.bin", images);
        const temp_file fl("idx_labels_three.bin", labels3);
        try {
            qip::load_idx(fi.path, fl.path);
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::count_mismatch);
        }
    }

    SECTION("trailing bytes after the payload are rejected") {
        const temp_file fi("idx_images_long.bin", images + std::string(1, '\0'));
        const temp_file fl("idx_labels_ok6.bin", labels);
        try {
            qip::load_idx(fi.path, fl.path);
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::count_mismatch);
        }
    }
}

TEST_CASE("feature files") {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> g(0.0, 2.0);
    qip::matrix x(10, 16);
    for (double& v : x.data) {
        v = g(rng);
    }
    std::vector<int> labels(10);
    for (std::size_t i = 0; i < 10; ++i) {
        labels[i] = static_cast<int>(i % 3);
    }

    SECTION("round trip is bitwise, with and without labels") {
        const std::string plain = qip::serialize_features(x);
        const qip::feature_file back = qip::deserialize_features(plain);
        REQUIRE_FALSE(back.has_labels);
        REQUIRE(back.x.rows == 10);
        REQUIRE(back.x.cols == 16);
        REQUIRE(back.x.data == x.data);
        REQUIRE(qip::serialize_features(back.x) == plain);

        const std::string labeled = qip::serialize_features(x, labels);
        const qip::feature_file lb = qip::deserialize_features(labeled);
        REQUIRE(lb.has_labels);
        REQUIRE(lb.labels == labels);
        REQUIRE(lb.x.data == x.data);
    }

    SECTION("file round trip") {
        const std::string path = "features_roundtrip.bin";
        qip::save_features(path, x, labels);
        const qip::feature_file back = qip::load_features(path);
        REQUIRE(back.x.data == x.data);
        REQUIRE(back.labels == labels);
        std::remove(path.c_str());
    }

    SECTION("empty matrix round trips") {
        const qip::matrix empty(0, 16);
        const qip::feature_file back =
            qip::deserialize_features(qip::serialize_features(empty));
        REQUIRE(back.x.rows == 0);
        REQUIRE(back.x.cols == 16);
        REQUIRE(back.x.data.empty());
    }

    SECTION("wrong magic is a version error") {
        std::string corrupt = qip::serialize_features(x);
        corrupt[3] = '2';
        try {
            qip::deserialize_features(corrupt);
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::bad_version);
        }
    }

    SECTION("truncation and trailing bytes are caught") {
        const std::string blob = qip::serialize_features(x);
        try {
            qip::deserialize_features(blob.substr(0, blob.size() / 2));
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::truncated);
        }
        try {
            qip::deserialize_features(blob + std::string(2, '\0'));
            FAIL("expected a data_error");
        } catch (const qip::data_error& e) {
            REQUIRE(e.which() == qip::data_error::kind::count_mismatch);
        }
    }

    SECTION("label shape and sign validation") {
        const std::vector<int> short_labels{0, 1};
        REQUIRE_THROWS_AS(qip::serialize_features(x, short_labels), std::invalid_argument);
        std::vector<int> negative(10, 0);
        negative[4] = -1;
        REQUIRE_THROWS_AS(qip::serialize_features(x, negative), std::invalid_argument);
    }
}

TEST_CASE("feature csv export") {
    qip::matrix x(2, 3);
    x(0, 0) = 1.5;
    x(0, 1) = -2.0;
    x(0, 2) = 0.25;
    x(1, 0) = 0.0;
    x(1, 1) = 1e-3;
    x(1, 2) = 3.0;
    const std::vector<int> labels{4, 9};

    const std::string csv = qip::features_to_csv(x, labels);
    REQUIRE(csv.rfind("x0, x1, x2, label\n", 0) == 0);
    REQUIRE(csv.find("\n1.5, -2, 0.25, 4\n") != std::string::npos);
    REQUIRE(csv.find("\n0, 0.001, 3, 9\n") != std::string::npos);

    SECTION("label column is optional") {
        const std::string bare = qip::features_to_csv(x);
        REQUIRE(bare.rfind("x0, x1, x2\n", 0) == 0);
        REQUIRE(bare.find("label") == std::string::npos);
    }

    SECTION("length mismatch is rejected") {
        const std::vector<int> wrong{1};
        REQUIRE_THROWS_AS(qip::features_to_csv(x, wrong), std::invalid_argument);
    }
}
