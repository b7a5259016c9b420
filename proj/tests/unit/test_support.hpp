/*
 * Copyright 2026 The vrag Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "vrag/corpus_store.hpp"
#include "vrag/neural_core.hpp"
#include "vrag/random.hpp"
#include "vrag/vector_math.hpp"

namespace vrag::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("vrag_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline Vector random_vector(Rng& rng, std::size_t dim) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    return v;
}

inline Vector random_unit(Rng& rng, std::size_t dim) { return l2_normalize(random_vector(rng, dim)); }

inline EmbeddingMatrix matrix_from_rows(const std::string& id, const std::vector<Vector>& rows, Modality m = Modality::Visual) {
    EmbeddingMatrix e;
    e.video_id = id;
    e.modality = m;
    e.count = static_cast<std::uint32_t>(rows.size());
    e.dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows[0].size());
    for (const auto& r : rows) {
        for (double x : r) e.values.push_back(static_cast<float>(x));
    }
    return e;
}

inline EmbeddingMatrix random_matrix(Rng& rng, const std::string& id, std::size_t count, std::size_t dim) {
    std::vector<Vector> rows;
    for (std::size_t i = 0; i < count; ++i) rows.push_back(random_vector(rng, dim));
    return matrix_from_rows(id, rows);
}

struct CorpusVideo {
    EmbeddingMatrix visual;
    std::optional<Vector> text;
};

/// Writes manifest.json plus embeddings/ under `dir` and returns the manifest path.
inline std::filesystem::path write_corpus(const std::filesystem::path& dir, const std::vector<CorpusVideo>& videos, std::uint32_t dim,
                                          const std::string& corpus_id = "synthetic") {
    CorpusManifest m{corpus_id, "test-encoder", dim, "embeddings", {}};
    std::filesystem::create_directories(dir / "embeddings");
    for (const auto& v : videos) {
        m.videos.push_back({v.visual.video_id, v.visual.video_id + ".mp4", static_cast<double>(v.visual.count), v.visual.count, {}, {}, {}});
        write_embeddings(v.visual, embedding_path(dir / "embeddings", v.visual.video_id, Modality::Visual));
        if (v.text) {
            auto t = matrix_from_rows(v.visual.video_id, {*v.text}, Modality::Text);
            write_embeddings(t, embedding_path(dir / "embeddings", v.visual.video_id, Modality::Text));
        }
    }
    save_manifest(m, dir / "manifest.json");
    return dir / "manifest.json";
}

// Deterministic net shared with tests/oracles/numeric_oracle.py:
// W_l[i][j] = 0.5 sin(1.3 (i fan_in + j) + l), b_l[i] = 0.1 cos(0.7 i + l).
inline MlpParams fixed_mlp(const std::array<std::size_t, 4>& dims) {
    MlpParams p = zero_mlp(dims);
    for (std::size_t l = 0; l < 3; ++l) {
        const std::size_t fan_in = p.layer_dims[l];
        for (std::size_t i = 0; i < p.layer_dims[l + 1]; ++i) {
            for (std::size_t j = 0; j < fan_in; ++j) p.weights[l][i * fan_in + j] = 0.5 * std::sin(1.3 * static_cast<double>(i * fan_in + j) + l);
            p.biases[l][i] = 0.1 * std::cos(0.7 * static_cast<double>(i) + l);
        }
    }
    return p;
}

}  // namespace vrag::testing
