#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sparseiter/analysis.hpp"
#include "sparseiter/dictionaries.hpp"
#include "sparseiter/errors.hpp"
#include "sparseiter/solvers.hpp"
#include "sparseiter/types.hpp"

// File formats (UTF-8, LF line endings, 17-significant-digit decimals):
//   matrix: "n N" header, then n lines of N space-separated reals
//   signal: "N k" header, then k lines of "index value"
//   vector: a matrix with one column ("n 1" header)
//   trace:  CSV "iter,lambda,support_size,detected,err_l2,err_zmax,support_changed,gamma"

namespace sparseiter {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary); // binary keeps LF on every platform
    if (!os) throw io_error("cannot open for writing: " + path.string());
    return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw io_error("cannot open for reading: " + path.string());
    return is;
}

inline double parse_double(const std::string& tok, const std::filesystem::path& path,
                           std::size_t line) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw format_error(path.string() + ": non-numeric token '" + tok + "'", line);
    return v;
}

inline std::size_t parse_count(const std::string& tok, const std::filesystem::path& path,
                               std::size_t line) {
    std::size_t v = 0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
        throw format_error(path.string() + ": non-numeric token '" + tok + "'", line);
    return v;
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream is(s);
    std::string tok;
    while (is >> tok) out.push_back(tok);
    return out;
}

} // namespace detail

inline void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
    std::ofstream os = detail::open_out(path);
    os << m.rows() << ' ' << m.cols() << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) {
            if (j) os << ' ';
            os << format_g17(m(i, j));
        }
        os << '\n';
    }
    if (!os) throw io_error("write failed: " + path.string());
}

inline DenseMatrix load_matrix(const std::filesystem::path& path) {
    std::ifstream is = detail::open_in(path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) throw format_error(path.string() + ": missing header", 1);
    auto head = detail::split_ws(line);
    if (head.size() != 2)
        throw format_error(path.string() + ": header must be 'n N'", 1);
    std::size_t n = detail::parse_count(head[0], path, 1);
    std::size_t N = detail::parse_count(head[1], path, 1);
    if (n < 1 || N < 1) throw format_error(path.string() + ": dimensions must be >= 1", 1);

    std::vector<double> entries;
    entries.reserve(n * N);
    for (std::size_t i = 0; i < n; ++i) {
        ++lineno;
        if (!std::getline(is, line))
            throw format_error(path.string() + ": expected " + std::to_string(n) + " rows", lineno);
        auto toks = detail::split_ws(line);
        if (toks.size() != N)
            throw format_error(path.string() + ": row " + std::to_string(i + 1) + " has " +
                                   std::to_string(toks.size()) + " values, expected " +
                                   std::to_string(N),
                               lineno);
        for (const auto& t : toks) entries.push_back(detail::parse_double(t, path, lineno));
    }
    return DenseMatrix(n, N, std::move(entries));
}

inline void save_signal(const SparseSignal& s, const std::filesystem::path& path) {
    std::ofstream os = detail::open_out(path);
    os << s.dim << ' ' << s.k() << '\n';
    for (const auto& e : s.entries) os << e.index << ' ' << format_g17(e.value) << '\n';
    if (!os) throw io_error("write failed: " + path.string());
}

inline SparseSignal load_signal(const std::filesystem::path& path) {
    std::ifstream is = detail::open_in(path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) throw format_error(path.string() + ": missing header", 1);
    auto head = detail::split_ws(line);
    if (head.size() != 2)
        throw format_error(path.string() + ": header must be 'N k'", 1);
    std::size_t N = detail::parse_count(head[0], path, 1);
    std::size_t k = detail::parse_count(head[1], path, 1);

    std::vector<SignalEntry> entries;
    for (std::size_t i = 0; i < k; ++i) {
        ++lineno;
        if (!std::getline(is, line))
            throw format_error(path.string() + ": expected " + std::to_string(k) + " entries",
                               lineno);
        auto toks = detail::split_ws(line);
        if (toks.size() != 2)
            throw format_error(path.string() + ": entry lines are 'index value'", lineno);
        entries.push_back(SignalEntry{detail::parse_count(toks[0], path, lineno),
                                      detail::parse_double(toks[1], path, lineno)});
    }
    return make_sparse_signal(N, std::move(entries));
}

inline void save_vector(const DenseVector& v, const std::filesystem::path& path) {
    std::ofstream os = detail::open_out(path);
    os << v.size() << " 1\n";
    for (std::size_t i = 0; i < v.size(); ++i) os << format_g17(v[i]) << '\n';
    if (!os) throw io_error("write failed: " + path.string());
}

inline DenseVector load_vector(const std::filesystem::path& path) {
    DenseMatrix m = load_matrix(path);
    if (m.cols() != 1)
        throw format_error(path.string() + ": vector files must have one column");
    std::vector<double> v(m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i) v[i] = m(i, 0);
    return DenseVector(std::move(v));
}

inline const char* kTraceCsvHeader =
    "iter,lambda,support_size,detected,err_l2,err_zmax,support_changed,gamma";

inline std::string trace_to_csv(const SolveResult& result) {
    std::ostringstream os;
    os << kTraceCsvHeader << '\n';
    for (const auto& row : result.trace) {
        os << row.iter << ',' << format_g17(row.lambda) << ',' << row.support_size << ',';
        if (row.detected) os << *row.detected;
        os << ',';
        if (row.err_l2) os << format_g17(*row.err_l2);
        os << ',';
        if (row.err_zmax) os << format_g17(*row.err_zmax);
        os << ',' << (row.support_changed ? 1 : 0) << ',';
        if (row.gamma) os << format_g17(*row.gamma);
        os << '\n';
    }
    return os.str();
}

inline void save_trace_csv(const SolveResult& result, const std::filesystem::path& path) {
    std::ofstream os = detail::open_out(path);
    os << trace_to_csv(result);
    if (!os) throw io_error("write failed: " + path.string());
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

} // namespace detail

/// Rebuild a SolveResult skeleton from a trace CSV. Active sets and x_hat are
/// not stored in the CSV; support_size/detected carry the recoverable data.
inline SolveResult load_trace_csv(const std::filesystem::path& path) {
    std::ifstream is = detail::open_in(path);
    std::string line;
    if (!std::getline(is, line)) throw format_error(path.string() + ": missing header", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTraceCsvHeader)
        throw format_error(path.string() + ": unexpected trace header", 1);

    SolveResult res;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = detail::split_csv(line);
        if (f.size() != 8)
            throw format_error(path.string() + ": expected 8 columns", lineno);
        IterationStep row;
        row.iter = detail::parse_count(f[0], path, lineno);
        row.lambda = detail::parse_double(f[1], path, lineno);
        row.support_size = detail::parse_count(f[2], path, lineno);
        if (!f[3].empty()) row.detected = detail::parse_count(f[3], path, lineno);
        if (!f[4].empty()) row.err_l2 = detail::parse_double(f[4], path, lineno);
        if (!f[5].empty()) row.err_zmax = detail::parse_double(f[5], path, lineno);
        row.support_changed = detail::parse_count(f[6], path, lineno) != 0;
        if (!f[7].empty()) row.gamma = detail::parse_double(f[7], path, lineno);
        res.trace.push_back(std::move(row));
    }
    res.iterations_run = res.trace.size();
    res.status = SolveStatus::max_iters_reached; // unknown from the CSV alone
    return res;
}

} // namespace sparseiter
