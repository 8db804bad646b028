#pragma once

// Text configuration (scene + experiment), the STAPCOV1 binary matrix format,
// the weights JSON sidecar and the CSV / .dat result writers.

#include "beamformers.hpp"
#include "complexity.hpp"
#include "evaluation.hpp"
#include "radar_scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace stap {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed configuration text; `line()` is 1-based.
class ParseError : public ModelError {
public:
    ParseError(std::size_t line, const std::string& msg)
        : ModelError("line " + std::to_string(line) + ": " + msg), line_(line) {}

    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

enum class ExperimentKind { kSinrVsSnapshots, kSinrVsDoppler, kPdVsSnr, kComplexity };

inline constexpr std::string_view experiment_tag(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::kSinrVsSnapshots: return "sinr-vs-snapshots";
        case ExperimentKind::kSinrVsDoppler: return "sinr-vs-doppler";
        case ExperimentKind::kPdVsSnr: return "pd-vs-snr";
        case ExperimentKind::kComplexity: return "complexity";
    }
    return "unknown";
}

inline std::optional<ExperimentKind> parse_experiment_kind(std::string_view tag) {
    for (const auto k : {ExperimentKind::kSinrVsSnapshots, ExperimentKind::kSinrVsDoppler,
                         ExperimentKind::kPdVsSnr, ExperimentKind::kComplexity}) {
        if (experiment_tag(k) == tag) return k;
    }
    return std::nullopt;
}

struct ExperimentSpec {
    ExperimentKind kind = ExperimentKind::kSinrVsSnapshots;
    std::vector<Algorithm> algorithms{Algorithm::kSmiMvdr, Algorithm::kLrEvd,  Algorithm::kLrKrylov,
                                      Algorithm::kLrJio,   Algorithm::kLrJidf, Algorithm::kSaMvdr,
                                      Algorithm::kKaMvdr};
    AlgorithmParams params;
    TargetSpec target;
    std::size_t runs = 10;
    std::size_t trials = 10000;
    double pfa = 1e-3;
    std::optional<std::size_t> k_train;  // unset: 100 for Doppler, 200 for Pd
    std::vector<std::size_t> snapshot_grid{25, 50, 100, 200, 400, 800};
    std::vector<double> doppler_grid;  // unset: -100..100 Hz in 5 Hz steps
    std::vector<double> snr_grid{-10, -8, -6, -4, -2, 0, 2, 4, 6, 8, 10};
    std::vector<std::uint64_t> m_grid{32, 64, 128, 256};
    std::string output_dir = "out";
    std::size_t threads = 1;
    double failure_budget = 0.01;

    bool operator==(const ExperimentSpec&) const = default;

    [[nodiscard]] std::size_t training_size() const {
        if (k_train) return *k_train;
        return kind == ExperimentKind::kPdVsSnr ? 200 : 100;
    }

    [[nodiscard]] std::vector<double> doppler_values() const {
        if (!doppler_grid.empty()) return doppler_grid;
        std::vector<double> grid;
        for (int f = -100; f <= 100; f += 5) grid.push_back(f);
        return grid;
    }

    void validate() const {
        if (algorithms.empty()) throw ValidationError("algorithms", "list is empty");
        if (runs < 1) throw ValidationError("runs", "must be >= 1");
        if (trials < 1) throw ValidationError("trials", "must be >= 1");
        if (!(pfa > 0.0 && pfa < 1.0)) throw ValidationError("pfa", "must lie in (0, 1)");
        if (k_train && *k_train < 1) throw ValidationError("k_train", "must be >= 1");
        if (snapshot_grid.empty()) throw ValidationError("snapshot_grid", "grid is empty");
        for (const auto k : snapshot_grid) {
            if (k < 1) throw ValidationError("snapshot_grid", "entries must be >= 1");
        }
        if (snr_grid.empty()) throw ValidationError("snr_grid", "grid is empty");
        if (m_grid.empty()) throw ValidationError("m_grid", "grid is empty");
        for (const auto m : m_grid) {
            if (m < 1) throw ValidationError("m_grid", "entries must be >= 1");
        }
        if (threads < 1) throw ValidationError("threads", "must be >= 1");
        if (!(failure_budget >= 0.0 && failure_budget <= 1.0)) {
            throw ValidationError("failure_budget", "must lie in [0, 1]");
        }
        if (params.rank < 1) throw ValidationError("rank", "must be >= 1");
        if (params.branches < 1) throw ValidationError("branches", "must be >= 1");
        if (params.interpolator_len < 1) throw ValidationError("interpolator_len", "must be >= 1");
        if (params.iterations < 1) throw ValidationError("iterations", "must be >= 1");
        if (!(params.loading >= 0.0)) throw ValidationError("loading", "must be >= 0");
        if (params.sa_lambda && !(*params.sa_lambda >= 0.0)) {
            throw ValidationError("sa_lambda", "must be >= 0");
        }
        if (!(params.sa_epsilon > 0.0)) throw ValidationError("sa_epsilon", "must be > 0");
        if (!(params.ka_alpha >= 0.0 && params.ka_alpha <= 1.0)) {
            throw ValidationError("ka_alpha", "must lie in [0, 1]");
        }
        if (!(params.ka_eta >= 0.0 && params.ka_eta <= 1.0)) {
            throw ValidationError("ka_eta", "must lie in [0, 1]");
        }
    }
};

struct BenchConfig {
    RadarConfig scene;
    ExperimentSpec experiment;

    bool operator==(const BenchConfig&) const = default;
};

// ---------------------------------------------------------------------------
// Number formatting

/// Shortest text that round-trips the double exactly.
inline std::string format_exact(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    std::array<char, 64> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

/// Nine significant digits, the CSV / .dat convention.
inline std::string format_sig9(double x) {
    if (std::isnan(x)) return "nan";
    std::array<char, 64> buf{};
    std::snprintf(buf.data(), buf.size(), "%.9g", x);
    return buf.data();
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        const auto item = trim(s.substr(0, comma));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

inline double parse_double(std::string_view text, std::size_t line, std::string_view key) {
    if (text == "inf" || text == "+inf") return std::numeric_limits<double>::infinity();
    if (text == "-inf") return -std::numeric_limits<double>::infinity();
    double value = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(line, std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

inline std::uint64_t parse_unsigned(std::string_view text, std::size_t line, std::string_view key) {
    std::uint64_t value = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw ParseError(line, std::string(key) + ": expected a non-negative integer, got '" +
                                   std::string(text) + "'");
    }
    return value;
}

/// Comma list whose items are numbers or inclusive ranges `start:step:stop`.
inline std::vector<double> parse_grid(std::string_view text, std::size_t line, std::string_view key) {
    std::vector<double> out;
    for (const auto item : split_list(text)) {
        const auto c1 = item.find(':');
        if (c1 == std::string_view::npos) {
            out.push_back(parse_double(item, line, key));
            continue;
        }
        const auto c2 = item.find(':', c1 + 1);
        if (c2 == std::string_view::npos) {
            throw ParseError(line, std::string(key) + ": range must be start:step:stop");
        }
        const double start = parse_double(trim(item.substr(0, c1)), line, key);
        const double step = parse_double(trim(item.substr(c1 + 1, c2 - c1 - 1)), line, key);
        const double stop = parse_double(trim(item.substr(c2 + 1)), line, key);
        if (!(step > 0.0) || stop < start) {
            throw ParseError(line, std::string(key) + ": range needs step > 0 and stop >= start");
        }
        const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (std::size_t k = 0; k < count; ++k) out.push_back(start + static_cast<double>(k) * step);
    }
    return out;
}

template <typename T>
std::vector<T> parse_count_grid(std::string_view text, std::size_t line, std::string_view key) {
    std::vector<T> out;
    for (const double v : parse_grid(text, line, key)) {
        if (!(v >= 0.0) || v != std::floor(v)) {
            throw ParseError(line, std::string(key) + ": entries must be non-negative integers");
        }
        out.push_back(static_cast<T>(v));
    }
    return out;
}

template <typename T>
std::string join(const std::vector<T>& values) {
    std::string out;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k > 0) out += ", ";
        if constexpr (std::is_floating_point_v<T>) {
            out += format_exact(values[k]);
        } else if constexpr (std::is_same_v<T, std::string>) {
            out += values[k];
        } else {
            out += std::to_string(values[k]);
        }
    }
    return out;
}

inline std::string_view ka_mode_tag(KaModeKind k) {
    switch (k) {
        case KaModeKind::kFixedAlpha: return "fixed-alpha";
        case KaModeKind::kFixedEta: return "fixed-eta";
        case KaModeKind::kOptimalEta: return "optimal-eta";
    }
    return "unknown";
}

enum class Section { kScene, kJammer, kTarget, kExperiment, kAlgorithm };

inline void apply_scene_key(RadarConfig& c, std::string_view key, std::string_view v, std::size_t line) {
    if (key == "carrier_frequency_hz") c.carrier_frequency_hz = parse_double(v, line, key);
    else if (key == "prf_hz") c.prf_hz = parse_double(v, line, key);
    else if (key == "platform_velocity_mps") c.platform_velocity_mps = parse_double(v, line, key);
    else if (key == "platform_height_m") c.platform_height_m = parse_double(v, line, key);
    else if (key == "num_sensors") c.num_sensors = parse_unsigned(v, line, key);
    else if (key == "num_pulses") c.num_pulses = parse_unsigned(v, line, key);
    else if (key == "element_spacing_m") c.element_spacing_m = parse_double(v, line, key);
    else if (key == "cnr_db") c.cnr_db = parse_double(v, line, key);
    else if (key == "noise_power") c.noise_power = parse_double(v, line, key);
    else if (key == "clutter_patches") c.clutter_patches = parse_unsigned(v, line, key);
    else if (key == "range_ambiguities") c.range_ambiguities = parse_unsigned(v, line, key);
    else if (key == "master_seed") c.master_seed = parse_unsigned(v, line, key);
    else throw ParseError(line, "unknown key '" + std::string(key) + "'");
}

inline void apply_jammer_key(JammerSpec& j, std::string_view key, std::string_view v, std::size_t line) {
    if (key == "azimuth_deg") j.azimuth_deg = parse_double(v, line, key);
    else if (key == "jnr_db") j.jnr_db = parse_double(v, line, key);
    else throw ParseError(line, "unknown key '" + std::string(key) + "' in [jammer]");
}

inline void apply_target_key(TargetSpec& t, std::string_view key, std::string_view v, std::size_t line) {
    if (key == "azimuth_deg") t.azimuth_deg = parse_double(v, line, key);
    else if (key == "doppler_hz") t.doppler_hz = parse_double(v, line, key);
    else if (key == "snr_db") t.snr_db = parse_double(v, line, key);
    else throw ParseError(line, "unknown key '" + std::string(key) + "' in [target]");
}

inline void apply_experiment_key(ExperimentSpec& e, std::string_view key, std::string_view v,
                                 std::size_t line) {
    if (key == "kind") {
        const auto kind = parse_experiment_kind(v);
        if (!kind) throw ParseError(line, "kind: unknown experiment '" + std::string(v) + "'");
        e.kind = *kind;
    } else if (key == "algorithms") {
        e.algorithms.clear();
        for (const auto tag : split_list(v)) {
            const auto a = parse_algorithm(tag);
            if (!a) throw ParseError(line, "algorithms: unknown algorithm '" + std::string(tag) + "'");
            e.algorithms.push_back(*a);
        }
    } else if (key == "runs") e.runs = parse_unsigned(v, line, key);
    else if (key == "trials") e.trials = parse_unsigned(v, line, key);
    else if (key == "pfa") e.pfa = parse_double(v, line, key);
    else if (key == "k_train") e.k_train = parse_unsigned(v, line, key);
    else if (key == "snapshot_grid") e.snapshot_grid = parse_count_grid<std::size_t>(v, line, key);
    else if (key == "doppler_grid") e.doppler_grid = parse_grid(v, line, key);
    else if (key == "snr_grid") e.snr_grid = parse_grid(v, line, key);
    else if (key == "m_grid") e.m_grid = parse_count_grid<std::uint64_t>(v, line, key);
    else if (key == "output_dir") e.output_dir = std::string(v);
    else if (key == "threads") e.threads = parse_unsigned(v, line, key);
    else if (key == "failure_budget") e.failure_budget = parse_double(v, line, key);
    else throw ParseError(line, "unknown key '" + std::string(key) + "' in [experiment]");
}

inline void apply_algorithm_key(AlgorithmParams& p, std::string_view key, std::string_view v,
                                std::size_t line) {
    if (key == "rank") p.rank = parse_unsigned(v, line, key);
    else if (key == "branches") p.branches = parse_unsigned(v, line, key);
    else if (key == "interpolator_len") p.interpolator_len = parse_unsigned(v, line, key);
    else if (key == "iterations") p.iterations = parse_unsigned(v, line, key);
    else if (key == "loading") p.loading = parse_double(v, line, key);
    else if (key == "sa_lambda") p.sa_lambda = parse_double(v, line, key);
    else if (key == "sa_lambda_grid") p.sa_lambda_grid = parse_grid(v, line, key);
    else if (key == "sa_epsilon") p.sa_epsilon = parse_double(v, line, key);
    else if (key == "sa_iterations") p.sa_iterations = parse_unsigned(v, line, key);
    else if (key == "ka_mode") {
        if (v == "fixed-alpha") p.ka_mode = KaModeKind::kFixedAlpha;
        else if (v == "fixed-eta") p.ka_mode = KaModeKind::kFixedEta;
        else if (v == "optimal-eta") p.ka_mode = KaModeKind::kOptimalEta;
        else throw ParseError(line, "ka_mode: expected fixed-alpha, fixed-eta or optimal-eta");
    } else if (key == "ka_alpha") p.ka_alpha = parse_double(v, line, key);
    else if (key == "ka_eta") p.ka_eta = parse_double(v, line, key);
    else if (key == "ka_velocity_delta") p.ka_mismatch.velocity_delta = parse_double(v, line, key);
    else if (key == "ka_cnr_delta_db") p.ka_mismatch.cnr_delta_db = parse_double(v, line, key);
    else throw ParseError(line, "unknown key '" + std::string(key) + "' in [algorithm]");
}

}  // namespace detail

/// Parses configuration text. Top-level keys are RadarConfig fields; `[jammer]` may
/// repeat, `[target]`, `[experiment]` and `[algorithm]` hold the experiment setup.
/// Anything after `#` is a comment. Missing keys keep their reference defaults.
inline BenchConfig parse_config_text(std::string_view text) {
    BenchConfig cfg;
    auto section = detail::Section::kScene;
    std::size_t line_no = 0;
    while (!text.empty()) {
        ++line_no;
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
            const auto name = detail::trim(line.substr(1, line.size() - 2));
            if (name == "jammer") {
                section = detail::Section::kJammer;
                cfg.scene.jammers.emplace_back();
            } else if (name == "target") section = detail::Section::kTarget;
            else if (name == "experiment") section = detail::Section::kExperiment;
            else if (name == "algorithm") section = detail::Section::kAlgorithm;
            else throw ParseError(line_no, "unknown section '" + std::string(name) + "'");
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
        const auto key = detail::trim(line.substr(0, eq));
        const auto value = detail::trim(line.substr(eq + 1));
        if (key.empty()) throw ParseError(line_no, "missing key before '='");
        if (value.empty()) throw ParseError(line_no, std::string(key) + ": missing value");

        switch (section) {
            case detail::Section::kScene: detail::apply_scene_key(cfg.scene, key, value, line_no); break;
            case detail::Section::kJammer:
                detail::apply_jammer_key(cfg.scene.jammers.back(), key, value, line_no);
                break;
            case detail::Section::kTarget:
                detail::apply_target_key(cfg.experiment.target, key, value, line_no);
                break;
            case detail::Section::kExperiment:
                detail::apply_experiment_key(cfg.experiment, key, value, line_no);
                break;
            case detail::Section::kAlgorithm:
                detail::apply_algorithm_key(cfg.experiment.params, key, value, line_no);
                break;
        }
    }
    cfg.scene.validate();
    cfg.experiment.validate();
    return cfg;
}

inline BenchConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

/// Writes every field explicitly so that parse_config_text(serialize_config(c)) == c.
inline std::string serialize_config(const BenchConfig& cfg) {
    const auto& s = cfg.scene;
    const auto& e = cfg.experiment;
    const auto& p = e.params;
    std::ostringstream out;
    out << "carrier_frequency_hz = " << format_exact(s.carrier_frequency_hz) << '\n'
        << "prf_hz = " << format_exact(s.prf_hz) << '\n'
        << "platform_velocity_mps = " << format_exact(s.platform_velocity_mps) << '\n'
        << "platform_height_m = " << format_exact(s.platform_height_m) << '\n'
        << "num_sensors = " << s.num_sensors << '\n'
        << "num_pulses = " << s.num_pulses << '\n';
    if (s.element_spacing_m) out << "element_spacing_m = " << format_exact(*s.element_spacing_m) << '\n';
    out << "cnr_db = " << format_exact(s.cnr_db) << '\n'
        << "noise_power = " << format_exact(s.noise_power) << '\n'
        << "clutter_patches = " << s.clutter_patches << '\n'
        << "range_ambiguities = " << s.range_ambiguities << '\n'
        << "master_seed = " << s.master_seed << '\n';
    for (const auto& j : s.jammers) {
        out << "\n[jammer]\nazimuth_deg = " << format_exact(j.azimuth_deg)
            << "\njnr_db = " << format_exact(j.jnr_db) << '\n';
    }
    out << "\n[target]\nazimuth_deg = " << format_exact(e.target.azimuth_deg)
        << "\ndoppler_hz = " << format_exact(e.target.doppler_hz)
        << "\nsnr_db = " << format_exact(e.target.snr_db) << '\n';

    std::vector<std::string> tags;
    for (const auto a : e.algorithms) tags.emplace_back(algorithm_tag(a));
    out << "\n[experiment]\nkind = " << experiment_tag(e.kind) << "\nalgorithms = " << detail::join(tags)
        << "\nruns = " << e.runs << "\ntrials = " << e.trials << "\npfa = " << format_exact(e.pfa) << '\n';
    if (e.k_train) out << "k_train = " << *e.k_train << '\n';
    out << "snapshot_grid = " << detail::join(e.snapshot_grid) << '\n';
    if (!e.doppler_grid.empty()) out << "doppler_grid = " << detail::join(e.doppler_grid) << '\n';
    out << "snr_grid = " << detail::join(e.snr_grid) << '\n'
        << "m_grid = " << detail::join(e.m_grid) << '\n'
        << "output_dir = " << e.output_dir << '\n'
        << "threads = " << e.threads << '\n'
        << "failure_budget = " << format_exact(e.failure_budget) << '\n';

    out << "\n[algorithm]\nrank = " << p.rank << "\nbranches = " << p.branches
        << "\ninterpolator_len = " << p.interpolator_len << "\niterations = " << p.iterations
        << "\nloading = " << format_exact(p.loading) << '\n';
    if (p.sa_lambda) out << "sa_lambda = " << format_exact(*p.sa_lambda) << '\n';
    out << "sa_lambda_grid = " << detail::join(p.sa_lambda_grid) << '\n'
        << "sa_epsilon = " << format_exact(p.sa_epsilon) << '\n'
        << "sa_iterations = " << p.sa_iterations << '\n'
        << "ka_mode = " << detail::ka_mode_tag(p.ka_mode) << '\n'
        << "ka_alpha = " << format_exact(p.ka_alpha) << '\n'
        << "ka_eta = " << format_exact(p.ka_eta) << '\n'
        << "ka_velocity_delta = " << format_exact(p.ka_mismatch.velocity_delta) << '\n'
        << "ka_cnr_delta_db = " << format_exact(p.ka_mismatch.cnr_delta_db) << '\n';
    return out.str();
}

// ---------------------------------------------------------------------------
// STAPCOV1 binary matrices

inline constexpr std::array<char, 8> kCovarianceMagic = {'S', 'T', 'A', 'P', 'C', 'O', 'V', '1'};

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
    std::array<unsigned char, 8> bytes{};
    for (int k = 0; k < 8; ++k) bytes[k] = static_cast<unsigned char>(v >> (8 * k));
    out.write(reinterpret_cast<const char*>(bytes.data()), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
    std::array<unsigned char, 8> bytes{};
    in.read(reinterpret_cast<char*>(bytes.data()), 8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(bytes[k]) << (8 * k);
    return v;
}

inline void put_f64(std::ostream& out, double x) {
    std::uint64_t bits = 0;
    std::memcpy(&bits, &x, sizeof bits);
    put_u64(out, bits);
}

inline double get_f64(std::istream& in) {
    const std::uint64_t bits = get_u64(in);
    double x = 0.0;
    std::memcpy(&x, &bits, sizeof x);
    return x;
}

}  // namespace detail

inline void write_matrix(std::ostream& out, const ComplexMatrix& a) {
    out.write(kCovarianceMagic.data(), kCovarianceMagic.size());
    detail::put_u64(out, static_cast<std::uint64_t>(a.rows()));
    detail::put_u64(out, static_cast<std::uint64_t>(a.cols()));
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            detail::put_f64(out, a(i, j).real());
            detail::put_f64(out, a(i, j).imag());
        }
    }
}

inline ComplexMatrix read_matrix(std::istream& in) {
    std::array<char, 8> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kCovarianceMagic) throw IoError("not a STAPCOV1 matrix file (bad magic)");
    const std::uint64_t rows = detail::get_u64(in);
    const std::uint64_t cols = detail::get_u64(in);
    if (!in) throw IoError("truncated STAPCOV1 header");
    if (rows > (1U << 20) || cols > (1U << 20)) throw IoError("STAPCOV1 dimensions are implausible");
    ComplexMatrix a(static_cast<Index>(rows), static_cast<Index>(cols));
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            const double re = detail::get_f64(in);
            const double im = detail::get_f64(in);
            a(i, j) = {re, im};
        }
    }
    if (!in) throw IoError("truncated STAPCOV1 payload");
    return a;
}

inline void write_matrix_file(const std::filesystem::path& path, const ComplexMatrix& a) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    write_matrix(out, a);
    if (!out) throw IoError("write failed: " + path.string());
}

inline ComplexMatrix read_matrix_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return read_matrix(in);
}

// ---------------------------------------------------------------------------
// Weights export: `<stem>.bin` (M x 1 STAPCOV1) + `<stem>.json`

inline nlohmann::json weights_metadata(const BeamformerWeights& w) {
    nlohmann::json j;
    j["algorithm"] = w.algorithm;
    j["length"] = w.w.size();
    j["rank_d"] = w.rank_d ? nlohmann::json(*w.rank_d) : nlohmann::json(nullptr);
    j["multiplication_count"] = w.multiplication_count;
    nlohmann::json hp = nlohmann::json::object();
    for (const auto& [key, value] : w.hyperparams) hp[key] = value;
    j["hyperparams"] = hp;
    return j;
}

inline void write_weights(const std::filesystem::path& stem, const BeamformerWeights& w) {
    write_matrix_file(std::filesystem::path(stem).concat(".bin"), ComplexMatrix(w.w));
    const auto json_path = std::filesystem::path(stem).concat(".json");
    std::ofstream out(json_path);
    if (!out) throw IoError("cannot open " + json_path.string() + " for writing");
    out << weights_metadata(w).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Result tables

struct CsvRow {
    std::string algorithm;
    double x = 0.0;
    double metric = 0.0;
    double spread = 0.0;
    std::size_t runs = 0;
};

inline constexpr std::string_view kCsvHeader = "algorithm,x_value,metric,std,runs";

inline std::vector<CsvRow> to_rows(const std::vector<Curve<SinrPoint>>& curves) {
    std::vector<CsvRow> rows;
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            rows.push_back({std::string(algorithm_tag(c.algorithm)), p.x, p.sinr_db, p.std_db, p.run_count});
        }
    }
    return rows;
}

/// Pd rows; `std` is the binomial standard error of the empirical Pd.
inline std::vector<CsvRow> to_rows(const std::vector<Curve<DetectionPoint>>& curves, std::size_t runs) {
    std::vector<CsvRow> rows;
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            const double se = p.trials > 0 ? std::sqrt(p.pd * (1.0 - p.pd) / static_cast<double>(p.trials)) : 0.0;
            rows.push_back({std::string(algorithm_tag(c.algorithm)), p.snr_db, p.pd, se, runs - p.failures});
        }
    }
    return rows;
}

inline std::vector<CsvRow> to_rows(const std::vector<Curve<ComplexityPoint>>& curves) {
    std::vector<CsvRow> rows;
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            rows.push_back({std::string(algorithm_tag(c.algorithm)), static_cast<double>(p.m),
                            static_cast<double>(p.multiplications), 0.0, 1});
        }
    }
    return rows;
}

inline std::string format_csv(const std::vector<CsvRow>& rows) {
    std::string out(kCsvHeader);
    out += '\n';
    for (const auto& r : rows) {
        out += r.algorithm + ',' + format_sig9(r.x) + ',' + format_sig9(r.metric) + ',' + format_sig9(r.spread) +
               ',' + std::to_string(r.runs) + '\n';
    }
    return out;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

/// Writes `<kind>.csv` plus `<kind>_<algorithm>.dat` (two columns: x, metric).
/// Returns the paths written, CSV first.
inline std::vector<std::filesystem::path> write_results(const std::filesystem::path& dir,
                                                        std::string_view kind,
                                                        const std::vector<CsvRow>& rows) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    const auto csv_path = dir / (std::string(kind) + ".csv");
    write_text_file(csv_path, format_csv(rows));
    written.push_back(csv_path);

    std::vector<std::string> order;
    for (const auto& r : rows) {
        if (std::find(order.begin(), order.end(), r.algorithm) == order.end()) order.push_back(r.algorithm);
    }
    for (const auto& alg : order) {
        std::string text = "# x_value metric\n";
        for (const auto& r : rows) {
            if (r.algorithm == alg) text += format_sig9(r.x) + ' ' + format_sig9(r.metric) + '\n';
        }
        const auto dat_path = dir / (std::string(kind) + "_" + alg + ".dat");
        write_text_file(dat_path, text);
        written.push_back(dat_path);
    }
    return written;
}

}  // namespace stap
