#pragma once
// Test helpers and reference oracles. The oracles here deliberately share no
// code with the library: they re-derive values from first principles.

#include "cid/record.hpp"

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <unistd.h>

namespace testing_support {

namespace fs = std::filesystem;

inline fs::path fixtures_dir() { return fs::path(CID_FIXTURES_DIR); }
inline fs::path data_dir() { return fs::path(CID_DATA_DIR); }

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = fs::temp_directory_path() /
                ("cid-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream b;
    b << in.rdbuf();
    return b.str();
}

inline void spit(const fs::path& p, const std::string& s) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << s;
}

/// Relative path -> bytes for every regular file below `root`.
inline std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
    }
    return out;
}

// ---- hashed bag-of-tokens oracle ----------------------------------------

/// Reference tokenizer: maximal runs of [A-Za-z0-9] or bytes >= 0x80, lowercased.
inline std::vector<std::string> oracle_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : s) {
        const bool word = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
        if (word) {
            cur.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c + 32 : c));
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::uint64_t oracle_fnv1a(const std::string& s) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Sum of a[i]*b[i] in the documented order: four strided lanes over the
/// blocked prefix, combined (l0+l2)+(l1+l3), then the tail left to right.
inline double oracle_dot(const std::vector<double>& a, const std::vector<double>& b) {
    const std::size_t n = a.size();
    const std::size_t blocked = n - n % 4;
    double l[4] = {0, 0, 0, 0};
    for (std::size_t i = 0; i < blocked; i += 4) {
        for (int j = 0; j < 4; ++j) {
            const double p = a[i + j] * b[i + j];
            l[j] = l[j] + p;
        }
    }
    double s = (l[0] + l[2]) + (l[1] + l[3]);
    for (std::size_t i = blocked; i < n; ++i) {
        const double p = a[i] * b[i];
        s = s + p;
    }
    return s;
}

inline std::vector<double> oracle_embed(const std::string& text, std::size_t dim = 256) {
    std::vector<double> v(dim, 0.0);
    for (const auto& t : oracle_tokens(text)) v[oracle_fnv1a(t) % dim] += 1.0;
    const double norm = std::sqrt(oracle_dot(v, v));
    if (norm > 0.0) {
        for (double& x : v) x /= norm;
    }
    return v;
}

inline double oracle_cosine(const std::vector<double>& a, const std::vector<double>& b) {
    const double c = oracle_dot(a, b) / (std::sqrt(oracle_dot(a, a)) * std::sqrt(oracle_dot(b, b)));
    return c < -1.0 ? -1.0 : (c > 1.0 ? 1.0 : c);
}

// ---- transcript-driven feature oracle -----------------------------------

struct OracleTurn {
    std::string prompt, response;
};

/// Reads a transcript JSONL straight off disk into session -> turns.
inline std::map<std::string, std::vector<OracleTurn>> oracle_read_transcript(const fs::path& path) {
    std::map<std::string, std::vector<OracleTurn>> out;
    std::istringstream in(slurp(path));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto j = nlohmann::json::parse(line);
        auto& turns = out[j["session_id"].get<std::string>()];
        const auto turn = j["turn"].get<std::size_t>();
        if (turns.size() <= turn) turns.resize(turn + 1);
        turns[turn] = {j["prompt"].get<std::string>(), j["response"].get<std::string>()};
    }
    return out;
}

/// All 24 features of explanation `i`, computed from the transcript alone:
/// the explanation body is recovered from the generation prompt, questions
/// and responses from the interrogation session (turns 2+6i .. 2+6i+5).
inline std::array<double, 24> oracle_features(const std::map<std::string, std::vector<OracleTurn>>& tr,
                                              const std::string& record_id, std::size_t i) {
    const std::string prefix = "Generate a question that starts with Why to challenge the following ";
    const auto& gen = tr.at(record_id + "/generate-" + std::to_string(i));
    const std::string body = gen.at(0).prompt.substr(prefix.size());
    const auto& chat = tr.at(record_id + "/interrogate");
    std::vector<double> e = oracle_embed(body);
    std::vector<double> q[2][3], r[2][3];
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < 3; ++k) {
            const auto& t = chat.at(2 + 6 * i + 3 * s + k);
            q[s][k] = oracle_embed(t.prompt);
            r[s][k] = oracle_embed(t.response);
        }
    }
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    std::array<double, 24> f{};
    for (int s = 0; s < 2; ++s) {
        for (int k = 0; k < 3; ++k) {
            f[3 * s + k] = oracle_cosine(e, r[s][k]);
            f[12 + 3 * s + k] = oracle_cosine(q[s][k], r[s][k]);
        }
        for (int p = 0; p < 3; ++p) {
            f[6 + 3 * s + p] = oracle_cosine(r[s][pairs[p][0]], r[s][pairs[p][1]]);
            f[18 + 3 * s + p] = oracle_cosine(q[s][pairs[p][0]], q[s][pairs[p][1]]);
        }
    }
    return f;
}

// ---- synthetic separable data -------------------------------------------

struct SyntheticPoint {
    std::vector<double> x;
    bool incorrect;
};

/// Uniform points in [-1,1]^dim labelled by a random unit hyperplane through
/// the origin; points with |w.x| < margin are rejected.
inline std::vector<SyntheticPoint> separable_set(std::size_t n, std::size_t dim, double margin, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> w(dim);
    double norm = 0.0;
    for (auto& x : w) {
        x = g(rng);
        norm += x * x;
    }
    for (auto& x : w) x /= std::sqrt(norm);
    std::vector<SyntheticPoint> out;
    while (out.size() < n) {
        std::vector<double> x(dim);
        double m = 0.0;
        for (std::size_t i = 0; i < dim; ++i) {
            x[i] = u(rng);
            m += w[i] * x[i];
        }
        if (std::abs(m) < margin) continue;
        out.push_back({std::move(x), m > 0});
    }
    return out;
}

}  // namespace testing_support
