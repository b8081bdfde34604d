#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qhlab/errors.hpp"
#include "qhlab/fft.hpp"

namespace qhlab {

constexpr double kPi = 3.14159265358979323846;

// Uniform periodic grid on [-L, L), x_j = -L + j * 2L/N.  Dimensionless
// units throughout.
struct GridField1D {
    double L = 0.0;
    std::size_t N = 0;
    std::vector<cplx> samples;

    GridField1D() = default;
    GridField1D(double L_, std::size_t N_) : L(L_), N(N_), samples(N_) {
        validate();
    }

    void validate() const {
        if (!(L > 0.0)) throw schema_error("GridField1D: L must be > 0");
        if (N < 64 || !is_pow2(N))
            throw schema_error("GridField1D: N must be a power of 2, >= 64");
        if (samples.size() != N)
            throw schema_error("GridField1D: sample count mismatch");
    }

    double dx() const { return 2.0 * L / static_cast<double>(N); }
    double x(std::size_t j) const { return -L + static_cast<double>(j) * dx(); }

    // Fourier mode index k in [-N/2, N/2) for storage slot m; the dual
    // variable is xi_k = pi k / L.
    static long mode_of(std::size_t m, std::size_t N_) {
        long k = static_cast<long>(m);
        if (k >= static_cast<long>(N_ / 2)) k -= static_cast<long>(N_);
        return k;
    }
    double xi_of_mode(long k) const {
        return kPi * static_cast<double>(k) / L;
    }

    double norm() const {
        double s = 0.0;
        for (const auto& v : samples) s += std::norm(v);
        return std::sqrt(s * dx());
    }
};

struct Provenance {
    std::string kind = "unset";  // "free" | "perturbed" | custom
    std::string field_id;
    double dt = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["kind"] = kind;
        if (kind == "perturbed") {
            j["field_id"] = field_id;
            j["dt"] = dt;
        }
        return j;
    }
    static Provenance from_json(const nlohmann::json& j) {
        Provenance p;
        p.kind = j.at("kind").get<std::string>();
        if (p.kind == "perturbed") {
            p.field_id = j.at("field_id").get<std::string>();
            p.dt = j.at("dt").get<double>();
        }
        return p;
    }
};

struct SpacetimeField {
    double t0 = 0.0;
    double t1 = 0.0;
    std::size_t N_t = 0;
    std::vector<GridField1D> slices;  // all share (L, N)
    Provenance provenance;

    void validate() const {
        if (N_t < 16) throw schema_error("SpacetimeField: N_t must be >= 16");
        if (slices.size() != N_t)
            throw schema_error("SpacetimeField: slice count mismatch");
        if (!(t1 > t0)) throw schema_error("SpacetimeField: need t1 > t0");
        for (const auto& s : slices) {
            s.validate();
            if (s.L != slices.front().L || s.N != slices.front().N)
                throw schema_error("SpacetimeField: slices must share (L, N)");
        }
    }

    double L() const { return slices.front().L; }
    std::size_t N() const { return slices.front().N; }
    double dt() const { return (t1 - t0) / static_cast<double>(N_t - 1); }
    double t(std::size_t k) const {
        return t0 + static_cast<double>(k) * dt();
    }

    // discrete space-time L2 norm, sqrt(sum |u|^2 dx dt)
    double norm() const {
        double s = 0.0;
        for (const auto& sl : slices)
            for (const auto& v : sl.samples) s += std::norm(v);
        return std::sqrt(s * slices.front().dx() * dt());
    }
};

namespace detail {

template <class T>
void put_le(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <class T>
T get_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw schema_error("field container: truncated stream");
    return v;
}

} // namespace detail

inline constexpr char kFieldMagic[8] = {'Q', 'H', 'S', 'F', '0', '0', '0', '1'};

inline void write_spacetime_field(const SpacetimeField& u, std::ostream& os) {
    u.validate();
    os.write(kFieldMagic, 8);
    detail::put_le(os, u.L());
    detail::put_le(os, static_cast<std::uint32_t>(u.N()));
    detail::put_le(os, u.t0);
    detail::put_le(os, u.t1);
    detail::put_le(os, static_cast<std::uint32_t>(u.N_t));
    const std::string prov = u.provenance.to_json().dump();
    detail::put_le(os, static_cast<std::uint32_t>(prov.size()));
    os.write(prov.data(), static_cast<std::streamsize>(prov.size()));
    for (const auto& sl : u.slices)
        for (const auto& v : sl.samples) {
            detail::put_le(os, static_cast<float>(v.real()));
            detail::put_le(os, static_cast<float>(v.imag()));
        }
}

inline SpacetimeField read_spacetime_field(std::istream& is) {
    char magic[8];
    is.read(magic, 8);
    if (!is || std::memcmp(magic, kFieldMagic, 8) != 0)
        throw schema_error("field container: bad magic");
    SpacetimeField u;
    const double L = detail::get_le<double>(is);
    const auto N = detail::get_le<std::uint32_t>(is);
    u.t0 = detail::get_le<double>(is);
    u.t1 = detail::get_le<double>(is);
    u.N_t = detail::get_le<std::uint32_t>(is);
    const auto plen = detail::get_le<std::uint32_t>(is);
    std::string prov(plen, '\0');
    is.read(prov.data(), plen);
    if (!is) throw schema_error("field container: truncated provenance");
    try {
        u.provenance = Provenance::from_json(nlohmann::json::parse(prov));
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(std::string("field container: provenance: ") +
                           e.what());
    }
    u.slices.reserve(u.N_t);
    for (std::size_t k = 0; k < u.N_t; ++k) {
        GridField1D sl(L, N);
        for (std::size_t j = 0; j < N; ++j) {
            const float re = detail::get_le<float>(is);
            const float im = detail::get_le<float>(is);
            sl.samples[j] = cplx(re, im);
        }
        u.slices.push_back(std::move(sl));
    }
    u.validate();
    return u;
}

inline void save_spacetime_field(const SpacetimeField& u,
                                 const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw schema_error("cannot open for writing: " + path);
    write_spacetime_field(u, os);
}

inline SpacetimeField load_spacetime_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw schema_error("cannot open for reading: " + path);
    return read_spacetime_field(is);
}

// |u(t,x)|^2 heat-map rows t,x,abs2
inline void write_heatmap_csv(const SpacetimeField& u, std::ostream& os) {
    os << "t,x,abs2\n";
    char buf[96];
    for (std::size_t k = 0; k < u.N_t; ++k)
        for (std::size_t j = 0; j < u.N(); ++j) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.12g\n", u.t(k),
                          u.slices[k].x(j), std::norm(u.slices[k].samples[j]));
            os << buf;
        }
}

} // namespace qhlab
