#pragma once

#include "unravel/csl.hpp"
#include "unravel/density.hpp"
#include "unravel/trajectory.hpp"
#include "unravel/wavefunction.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <ios>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace unravel {
namespace io {

using json = nlohmann::json;

/// State container format, byte layout (little-endian):
///   8 bytes   magic "UNRVST01"
///   8 bytes   uint64 header length H
///   H bytes   UTF-8 JSON header: kind ("wavefunction" | "density"),
///             x_min, x_max, n_points, n_particles (wavefunction only)
///   rest      complex doubles as (re, im) pairs; the flat amplitude vector
///             for wavefunctions, column-major elements for density matrices
inline constexpr char state_magic[8] = {'U', 'N', 'R', 'V', 'S', 'T', '0', '1'};

namespace detail {

inline void write_chunk(std::ostream& out, const void* data, std::size_t bytes) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
    if (!out) throw std::runtime_error("state write failed");
}

inline void read_chunk(std::istream& in, void* data, std::size_t bytes) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(bytes));
    if (in.gcount() != static_cast<std::streamsize>(bytes))
        throw std::runtime_error("state read truncated");
}

inline void write_state_blob(std::ostream& out, const json& header,
                             const Complex* data, std::size_t count) {
    const std::string head = header.dump();
    const std::uint64_t head_len = head.size();
    write_chunk(out, state_magic, sizeof(state_magic));
    write_chunk(out, &head_len, sizeof(head_len));
    write_chunk(out, head.data(), head.size());
    write_chunk(out, data, count * sizeof(Complex));
}

inline json read_state_header(std::istream& in) {
    char magic[sizeof(state_magic)];
    read_chunk(in, magic, sizeof(magic));
    if (std::memcmp(magic, state_magic, sizeof(magic)) != 0)
        throw std::runtime_error("not a state file (bad magic)");
    std::uint64_t head_len = 0;
    read_chunk(in, &head_len, sizeof(head_len));
    if (head_len > (1u << 20)) throw std::runtime_error("state header too large");
    std::string head(static_cast<std::size_t>(head_len), '\0');
    read_chunk(in, head.data(), head.size());
    return json::parse(head);
}

inline SpatialGrid grid_from_header(const json& h) {
    return SpatialGrid(h.at("x_min").get<double>(), h.at("x_max").get<double>(),
                       h.at("n_points").get<int>());
}

} // namespace detail

inline void save_state(std::ostream& out, const WaveFunction& psi) {
    json header = {{"kind", "wavefunction"},
                   {"x_min", psi.grid().x_min()},
                   {"x_max", psi.grid().x_max()},
                   {"n_points", psi.grid().n_points()},
                   {"n_particles", psi.n_particles()}};
    detail::write_state_blob(out, header, psi.amplitudes().data(),
                             static_cast<std::size_t>(psi.amplitudes().size()));
}

inline void save_state(const std::string& path, const WaveFunction& psi) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_state(out, psi);
}

inline WaveFunction load_wavefunction(std::istream& in) {
    const json header = detail::read_state_header(in);
    if (header.at("kind").get<std::string>() != "wavefunction")
        throw std::runtime_error("state file does not hold a wavefunction");
    const SpatialGrid grid = detail::grid_from_header(header);
    const int n_particles = header.at("n_particles").get<int>();
    Eigen::Index count = grid.n_points();
    if (n_particles == 2) count *= grid.n_points();
    ComplexVector amps(count);
    detail::read_chunk(in, amps.data(), static_cast<std::size_t>(count) * sizeof(Complex));
    return WaveFunction(grid, n_particles, std::move(amps), false);
}

inline WaveFunction load_wavefunction(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_wavefunction(in);
}

inline void save_state(std::ostream& out, const DensityMatrix& rho) {
    json header = {{"kind", "density"},
                   {"x_min", rho.grid().x_min()},
                   {"x_max", rho.grid().x_max()},
                   {"n_points", rho.grid().n_points()}};
    detail::write_state_blob(out, header, rho.elements().data(),
                             static_cast<std::size_t>(rho.elements().size()));
}

inline void save_state(const std::string& path, const DensityMatrix& rho) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    save_state(out, rho);
}

inline DensityMatrix load_density(std::istream& in) {
    const json header = detail::read_state_header(in);
    if (header.at("kind").get<std::string>() != "density")
        throw std::runtime_error("state file does not hold a density matrix");
    const SpatialGrid grid = detail::grid_from_header(header);
    const int n = grid.n_points();
    ComplexMatrix elements(n, n);
    detail::read_chunk(in, elements.data(),
                       static_cast<std::size_t>(elements.size()) * sizeof(Complex));
    return DensityMatrix(grid, std::move(elements));
}

inline DensityMatrix load_density(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return load_density(in);
}

/// Event logs: one JSON object per line.
inline void write_events(std::ostream& out, const std::vector<JumpEvent>& events) {
    for (const auto& e : events)
        out << json{{"time", e.time},
                    {"particle_index", e.particle_index},
                    {"outcome", e.outcome}}
                   .dump()
            << '\n';
}

inline void write_events(std::ostream& out, const std::vector<KickEvent>& events) {
    for (const auto& e : events)
        out << json{{"time", e.time}, {"particle_index", e.particle_index}, {"k", e.k}}
                   .dump()
            << '\n';
}

template <typename Event>
void write_events(const std::string& path, const std::vector<Event>& events) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_events(out, events);
}

/// Decay curve: time, off-diagonal magnitude, and the rate fitted across
/// the whole curve (repeated per row so each row is self-describing).
inline void write_decay_csv(std::ostream& out, const std::vector<double>& times,
                            const std::vector<double>& magnitudes,
                            double fitted_rate) {
    if (times.size() != magnitudes.size())
        throw std::invalid_argument("write_decay_csv: size mismatch");
    out << "t,magnitude,fitted_rate\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < times.size(); ++i)
        out << times[i] << ',' << magnitudes[i] << ',' << fitted_rate << '\n';
}

inline void write_decay_csv(const std::string& path, const std::vector<double>& times,
                            const std::vector<double>& magnitudes, double fitted_rate) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_decay_csv(out, times, magnitudes, fitted_rate);
}

/// Signal trace: long format, one row per (time, cell).
inline void write_signal_csv(std::ostream& out, const SignalRecord& record) {
    out << "time,cell_center,value,expectation_part\n";
    out << std::setprecision(17);
    for (std::size_t t = 0; t < record.times.size(); ++t)
        for (std::size_t c = 0; c < record.cells.size(); ++c)
            out << record.times[t] << ',' << record.cells[c] << ','
                << record.values[t][c] << ',' << record.expectations[t][c] << '\n';
}

inline void write_signal_csv(const std::string& path, const SignalRecord& record) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_signal_csv(out, record);
}

/// Generic curve file: named columns, one row per sample.
inline void write_curve_csv(std::ostream& out, const std::vector<std::string>& names,
                            const std::vector<std::vector<double>>& columns) {
    if (names.size() != columns.size() || columns.empty())
        throw std::invalid_argument("write_curve_csv: column/name mismatch");
    for (std::size_t c = 0; c < names.size(); ++c)
        out << names[c] << (c + 1 < names.size() ? ',' : '\n');
    out << std::setprecision(17);
    const std::size_t rows = columns[0].size();
    for (const auto& col : columns)
        if (col.size() != rows)
            throw std::invalid_argument("write_curve_csv: ragged columns");
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < columns.size(); ++c)
            out << columns[c][r] << (c + 1 < columns.size() ? ',' : '\n');
}

inline void write_curve_csv(const std::string& path,
                            const std::vector<std::string>& names,
                            const std::vector<std::vector<double>>& columns) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_curve_csv(out, names, columns);
}

} // namespace io
} // namespace unravel
