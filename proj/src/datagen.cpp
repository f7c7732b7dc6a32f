#include "simtsc/datagen.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <stdexcept>

#include "simtsc/rng.hpp"

namespace simtsc {

namespace {

constexpr double kPi = 3.14159265358979323846;

double gaussian(Rng& rng) {
    // Box-Muller, cosine branch only.
    double u1 = rng.next_double();
    while (u1 <= 0.0) u1 = rng.next_double();
    const double u2 = rng.next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

double bump(double t, double center, double width) {
    const double z = (t - center) / width;
    return std::exp(-0.5 * z * z);
}

Dataset make_shell(const std::string& name, size_t n, size_t dims, size_t t_len, size_t classes) {
    Dataset ds;
    ds.name = name;
    ds.n = n;
    ds.dims = dims;
    ds.t_max = t_len;
    ds.num_classes = classes;
    ds.series.assign(n * dims * t_len, 0.0);
    ds.lengths.assign(n, t_len);
    ds.labels.assign(n, 0);
    return ds;
}

void assign_labels_round_robin(Dataset& ds) {
    for (size_t i = 0; i < ds.n; ++i) ds.labels[i] = static_cast<int>(i % ds.num_classes);
}

// --- cylinder / bell / funnel (Saito's process) ---------------------------

Dataset gen_cbf(uint64_t seed) {
    Dataset ds = make_shell("cbf", 930, 1, 128, 3);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        const size_t a = 16 + static_cast<size_t>(rng.next_below(16));   // onset
        const size_t b = a + 32 + static_cast<size_t>(rng.next_below(64));  // offset
        const double amp = 6.0 + gaussian(rng);
        double* x = ds.series_at(i, 0);
        for (size_t t = 0; t < ds.t_max; ++t) {
            double shape = 0.0;
            if (t >= a && t <= b) {
                const double frac =
                    static_cast<double>(t - a) / static_cast<double>(b - a);
                if (cls == 0) shape = amp;                  // cylinder
                if (cls == 1) shape = amp * frac;           // bell
                if (cls == 2) shape = amp * (1.0 - frac);   // funnel
            }
            x[t] = shape + gaussian(rng);
        }
    }
    return ds;
}

// --- two step patterns on a noisy background -------------------------------

Dataset gen_two_patterns(uint64_t seed) {
    Dataset ds = make_shell("two_patterns", 1000, 1, 128, 4);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const size_t plen = 32;  // 16 low + 16 high
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        const bool first_up = cls == 0 || cls == 1;
        const bool second_up = cls == 0 || cls == 2;
        double* x = ds.series_at(i, 0);
        for (size_t t = 0; t < ds.t_max; ++t) x[t] = 0.3 * gaussian(rng);
        const size_t p1 = static_cast<size_t>(rng.next_below(32));
        const size_t p2 = 64 + static_cast<size_t>(rng.next_below(32));
        auto place = [&](size_t pos, bool up) {
            for (size_t t = 0; t < plen; ++t)
                x[pos + t] = (t < plen / 2) == up ? -5.0 : 5.0;
        };
        place(p1, first_up);
        place(p2, second_up);
    }
    return ds;
}

// --- six control-chart classes ---------------------------------------------

Dataset gen_synthetic_control(uint64_t seed) {
    Dataset ds = make_shell("synthetic_control", 600, 1, 60, 6);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const double m = 30.0, s = 2.0;
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double a = rng.next_uniform(10.0, 15.0);
        const double period = rng.next_uniform(10.0, 15.0);
        const double g = rng.next_uniform(0.2, 0.5);
        const double k = rng.next_uniform(7.5, 20.0);
        const size_t p = 20 + static_cast<size_t>(rng.next_below(20));
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double r = rng.next_uniform(-3.0, 3.0);
            double v = m + r * s;
            const double td = static_cast<double>(t);
            switch (cls) {
                case 0: break;                                          // normal
                case 1: v += a * std::sin(2.0 * kPi * td / period); break;  // cyclic
                case 2: v += g * td; break;                             // increasing
                case 3: v -= g * td; break;                             // decreasing
                case 4: v += t >= p ? k : 0.0; break;                   // upward shift
                case 5: v -= t >= p ? k : 0.0; break;                   // downward shift
            }
            x[t] = v;
        }
    }
    return ds;
}

// --- spectra with class-dependent peak-amplitude ratios ---------------------

Dataset gen_coffee_like(uint64_t seed) {
    Dataset ds = make_shell("coffee_like", 56, 1, 286, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    const double centers[5] = {0.18, 0.30, 0.46, 0.62, 0.80};
    const double widths[5] = {0.050, 0.035, 0.060, 0.045, 0.050};
    const double amps[5] = {0.5, 1.0, 0.7, 0.9, 0.4};
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double shift = rng.next_uniform(-0.04, 0.04) * T;
        const double tilt = rng.next_uniform(-0.1, 0.1);
        double amp[5], wid[5];
        for (int p = 0; p < 5; ++p) {
            wid[p] = widths[p] * T * rng.next_uniform(0.85, 1.15);
            const bool ripple = p == 0 || p == 4;
            amp[p] = amps[p] * (ripple ? rng.next_uniform(0.5, 1.5)
                                       : rng.next_uniform(0.95, 1.05));
        }
        // The class signal is the relative height of the 2nd and 4th peaks.
        amp[1] *= cls == 0 ? 1.25 : 0.85;
        amp[3] *= cls == 0 ? 0.85 : 1.15;
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double td = static_cast<double>(t);
            double v = tilt * td / T;
            for (int p = 0; p < 5; ++p) v += amp[p] * bump(td, centers[p] * T + shift, wid[p]);
            x[t] = v + 0.02 * gaussian(rng);
        }
    }
    return ds;
}

// --- one bump, with a leading shoulder in class 0 ---------------------------

Dataset gen_gunpoint_like(uint64_t seed) {
    Dataset ds = make_shell("gunpoint_like", 200, 1, 150, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double center = (0.5 + rng.next_uniform(-0.07, 0.07)) * T;
        const double width = rng.next_uniform(0.10, 0.14) * T;
        const double shoulder_amp = cls == 0 ? rng.next_uniform(0.22, 0.42) : 0.0;
        const double dip_amp = cls == 0 ? rng.next_uniform(0.08, 0.18) : 0.0;
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double td = static_cast<double>(t);
            double v = bump(td, center, width);
            v += shoulder_amp * bump(td, center - 0.22 * T, 0.045 * T);
            v -= dip_amp * bump(td, center + 0.25 * T, 0.05 * T);
            x[t] = v + 0.05 * gaussian(rng);
        }
    }
    return ds;
}

// --- short daily profiles: two peaks vs one ---------------------------------

Dataset gen_italy_like(uint64_t seed) {
    Dataset ds = make_shell("italy_like", 1096, 1, 24, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        if (cls == 0) {
            const double c1 = 8.0 + rng.next_uniform(-1.0, 1.0);
            const double c2 = 19.0 + rng.next_uniform(-1.0, 1.0);
            const double a1 = rng.next_uniform(0.8, 1.2);
            const double a2 = rng.next_uniform(0.8, 1.2);
            const double w1 = rng.next_uniform(1.5, 2.5);
            const double w2 = rng.next_uniform(1.5, 2.5);
            for (size_t t = 0; t < ds.t_max; ++t) {
                const double td = static_cast<double>(t);
                x[t] = a1 * bump(td, c1, w1) + a2 * bump(td, c2, w2) + 0.12 * gaussian(rng);
            }
        } else {
            const double c = 13.0 + rng.next_uniform(-1.5, 1.5);
            const double a = rng.next_uniform(0.9, 1.3);
            const double w = rng.next_uniform(4.0, 6.0);
            for (size_t t = 0; t < ds.t_max; ++t) {
                const double td = static_cast<double>(t);
                x[t] = a * bump(td, c, w) + 0.12 * gaussian(rng);
            }
        }
    }
    return ds;
}

// --- heartbeat-shaped traces; class 1 flattens the late wave ----------------

Dataset gen_ecg_like(uint64_t seed) {
    Dataset ds = make_shell("ecg_like", 200, 1, 96, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double c = (0.30 + rng.next_uniform(-0.03, 0.03)) * T;
        const double qrs_w = cls == 0 ? 1.0 : rng.next_uniform(1.1, 1.4);
        const double t_amp = cls == 0 ? rng.next_uniform(0.30, 0.45)
                                      : rng.next_uniform(0.05, 0.20);
        const double t_center = (0.62 + rng.next_uniform(-0.04, 0.04)) * T;
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double td = static_cast<double>(t);
            double v = 0.15 * bump(td, 0.18 * T, 0.02 * T);
            v -= 0.35 * bump(td, c, 0.008 * T * qrs_w);
            v += 1.30 * bump(td, c + 0.015 * T, 0.010 * T * qrs_w);
            v -= 0.25 * bump(td, c + 0.030 * T, 0.008 * T * qrs_w);
            v += t_amp * bump(td, t_center, 0.05 * T);
            x[t] = v + 0.08 * gaussian(rng);
        }
    }
    return ds;
}

// --- damped oscillations, class split by frequency ---------------------------

Dataset gen_sony_like(uint64_t seed) {
    Dataset ds = make_shell("sony_like", 621, 1, 70, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double cycles =
            cls == 0 ? rng.next_uniform(3.5, 4.5) : rng.next_uniform(5.2, 6.2);
        const double lambda = rng.next_uniform(1.0, 2.5);
        const double phase = rng.next_uniform(0.0, 2.0 * kPi);
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double td = static_cast<double>(t);
            x[t] = std::exp(-lambda * td / T) * std::sin(2.0 * kPi * cycles * td / T + phase) +
                   0.15 * gaussian(rng);
        }
    }
    return ds;
}

// --- spectra with a nearly invisible class difference ------------------------

Dataset gen_wine_like(uint64_t seed) {
    Dataset ds = make_shell("wine_like", 111, 1, 234, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    const double centers[6] = {0.12, 0.27, 0.40, 0.55, 0.68, 0.85};
    const double widths[6] = {0.04, 0.045, 0.04, 0.05, 0.04, 0.045};
    const double amps[6] = {0.6, 1.0, 0.8, 0.9, 0.7, 0.5};
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double shift = rng.next_uniform(-0.01, 0.01) * T;
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double td = static_cast<double>(t);
            double v = 0.0;
            for (int p = 0; p < 6; ++p) {
                double c = centers[p] * T + shift;
                double a = amps[p] * rng.next_uniform(0.93, 1.07);
                if (cls == 1 && p == 3) a *= 1.04;
                if (cls == 1 && p == 1) c += 0.004 * T;
                v += a * bump(td, c, widths[p] * T);
            }
            x[t] = v + 0.02 * gaussian(rng);
        }
    }
    return ds;
}

// --- seven harmonic outline classes ------------------------------------------

Dataset gen_plane_like(uint64_t seed) {
    Dataset ds = make_shell("plane_like", 210, 1, 144, 7);
    assign_labels_round_robin(ds);
    // Per-class harmonic profiles come from a fixed stream so every class has
    // a stable, distinct outline.
    Rng profile_rng(0x706c616eULL);
    double coeff[7][6];
    for (auto& row : coeff)
        for (double& c : row) c = profile_rng.next_uniform(-1.0, 1.0);

    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        double* x = ds.series_at(i, 0);
        const double jitter = rng.next_uniform(-2.0, 2.0);
        double amp_jitter[6];
        for (double& a : amp_jitter) a = rng.next_uniform(0.95, 1.05);
        for (size_t t = 0; t < ds.t_max; ++t) {
            const double td = static_cast<double>(t) + jitter;
            double v = 0.0;
            for (int h = 0; h < 6; ++h)
                v += coeff[cls][h] * amp_jitter[h] *
                     std::sin(kPi * static_cast<double>(h + 1) * td / T);
            x[t] = v + 0.03 * gaussian(rng);
        }
    }
    return ds;
}

// --- multivariate motion-like bursts -----------------------------------------

Dataset gen_motions_like(uint64_t seed) {
    Dataset ds = make_shell("motions_like", 80, 6, 100, 4);
    assign_labels_round_robin(ds);
    Rng profile_rng(0x6d6f74696fULL);
    double freq[4][6], amp[4][6];
    for (int c = 0; c < 4; ++c)
        for (int m = 0; m < 6; ++m) {
            freq[c][m] = profile_rng.next_uniform(1.0, 6.0);
            amp[c][m] = profile_rng.next_uniform(0.4, 1.4);
        }
    Rng rng(seed);
    const double T = static_cast<double>(ds.t_max);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        const double phase = rng.next_uniform(0.0, 2.0 * kPi);
        for (size_t m = 0; m < ds.dims; ++m) {
            double* x = ds.series_at(i, m);
            const double a = amp[cls][m] * rng.next_uniform(0.9, 1.1);
            for (size_t t = 0; t < ds.t_max; ++t) {
                const double td = static_cast<double>(t);
                x[t] = a * std::sin(2.0 * kPi * freq[cls][m] * td / T + phase) +
                       0.10 * gaussian(rng);
            }
        }
    }
    return ds;
}

// --- variable-length sinusoids ------------------------------------------------

Dataset gen_varlen_toy(uint64_t seed) {
    Dataset ds = make_shell("varlen_toy", 40, 1, 60, 2);
    assign_labels_round_robin(ds);
    Rng rng(seed);
    for (size_t i = 0; i < ds.n; ++i) {
        const int cls = ds.labels[i];
        const size_t len = 20 + static_cast<size_t>(rng.next_below(41));
        ds.lengths[i] = len;
        double* x = ds.series_at(i, 0);
        const double cycles = cls == 0 ? 2.0 : 3.5;
        const double phase = rng.next_uniform(0.0, 2.0 * kPi);
        for (size_t t = 0; t < len; ++t)
            x[t] = std::sin(2.0 * kPi * cycles * static_cast<double>(t) /
                                static_cast<double>(len) +
                            phase) +
                   0.1 * gaussian(rng);
    }
    return ds;
}

struct GeneratorEntry {
    GeneratorInfo info;
    std::function<Dataset(uint64_t)> make;
};

const std::vector<GeneratorEntry>& generator_entries() {
    static const std::vector<GeneratorEntry> entries = {
        {{"cbf", 930, 1, 128, 3, 101, "cylinder/bell/funnel shapes"}, gen_cbf},
        {{"two_patterns", 1000, 1, 128, 4, 102, "two step patterns in noise"}, gen_two_patterns},
        {{"synthetic_control", 600, 1, 60, 6, 103, "control-chart classes"},
         gen_synthetic_control},
        {{"coffee_like", 56, 1, 286, 2, 104, "spectra, peak-ratio classes"}, gen_coffee_like},
        {{"gunpoint_like", 200, 1, 150, 2, 105, "bump with/without shoulder"}, gen_gunpoint_like},
        {{"italy_like", 1096, 1, 24, 2, 106, "daily profiles, two peaks vs one"}, gen_italy_like},
        {{"ecg_like", 200, 1, 96, 2, 107, "heartbeats, late-wave classes"}, gen_ecg_like},
        {{"sony_like", 621, 1, 70, 2, 108, "damped oscillations by frequency"}, gen_sony_like},
        {{"wine_like", 111, 1, 234, 2, 109, "spectra, near-identical classes"}, gen_wine_like},
        {{"plane_like", 210, 1, 144, 7, 110, "seven harmonic outlines"}, gen_plane_like},
        {{"motions_like", 80, 6, 100, 4, 111, "multivariate oscillation mix"}, gen_motions_like},
        {{"varlen_toy", 40, 1, 60, 2, 112, "variable-length sinusoids"}, gen_varlen_toy},
    };
    return entries;
}

}  // namespace

const std::vector<GeneratorInfo>& dataset_generators() {
    static const std::vector<GeneratorInfo> infos = [] {
        std::vector<GeneratorInfo> out;
        for (const auto& e : generator_entries()) out.push_back(e.info);
        return out;
    }();
    return infos;
}

Dataset generate_dataset(const std::string& name, uint64_t seed) {
    for (const auto& e : generator_entries())
        if (e.info.name == name) return e.make(seed);
    throw std::invalid_argument("unknown dataset generator: " + name);
}

Dataset generate_dataset(const std::string& name) {
    for (const auto& e : generator_entries())
        if (e.info.name == name) return e.make(e.info.default_seed);
    throw std::invalid_argument("unknown dataset generator: " + name);
}

void write_ucr_text(const Dataset& ds, const std::string& path) {
    auto dim_file = [&](size_t k) {
        if (ds.dims == 1) return path;
        const auto dot = path.find_last_of('.');
        const auto slash = path.find_last_of('/');
        if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
            return path + "_dim" + std::to_string(k);
        return path.substr(0, dot) + "_dim" + std::to_string(k) + path.substr(dot);
    };
    char buf[40];
    for (size_t m = 0; m < ds.dims; ++m) {
        std::ofstream out(dim_file(m));
        if (!out) throw std::runtime_error("cannot write dataset file: " + dim_file(m));
        for (size_t i = 0; i < ds.n; ++i) {
            out << ds.labels[i];
            const double* x = ds.series_at(i, m);
            for (size_t t = 0; t < ds.lengths[i]; ++t) {
                std::snprintf(buf, sizeof(buf), "%.17g", x[t]);
                out << '\t' << buf;
            }
            out << "\n";
        }
        if (!out) throw std::runtime_error("write failed: " + dim_file(m));
    }
}

}  // namespace simtsc
