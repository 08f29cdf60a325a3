#include "koop/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "koop/errors.hpp"

namespace koop {

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);  // LF line endings everywhere
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& path, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError(path + ":" + std::to_string(line_no) + ": not a number: '" + s + "'");
    }
}

}  // namespace

void write_snapshot_csv(const std::string& path, const SnapshotMatrix& snaps) {
    auto out = open_out(path);
    const bool complex_mode = !snaps.is_real(0.0);
    out << "# schema=snapshots version=1\n";
    out << "t";
    for (const auto& label : snaps.labels) {
        if (complex_mode) {
            out << ",re_" << label << ",im_" << label;
        } else {
            out << "," << label;
        }
    }
    out << "\n";
    for (int k = 0; k < snaps.values.cols(); ++k) {
        out << fmt(snaps.grid.time(k));
        for (int i = 0; i < snaps.rows(); ++i) {
            const Complex v = snaps.values(i, k);
            out << "," << fmt(v.real());
            if (complex_mode) out << "," << fmt(v.imag());
        }
        out << "\n";
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

SnapshotMatrix read_snapshot_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");

    std::string line;
    int line_no = 0;
    // Skip comment lines, then read the header.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        header = split_csv_line(line);
        break;
    }
    if (header.size() < 2 || header[0] != "t") {
        throw IoError(path + ": expected header 't,<label>,...'");
    }

    bool complex_mode = header[1].rfind("re_", 0) == 0;
    std::vector<std::string> labels;
    if (complex_mode) {
        if ((header.size() - 1) % 2 != 0) {
            throw IoError(path + ": complex header must pair re_/im_ columns");
        }
        for (std::size_t i = 1; i < header.size(); i += 2) {
            if (header[i].rfind("re_", 0) != 0 || header[i + 1].rfind("im_", 0) != 0 ||
                header[i].substr(3) != header[i + 1].substr(3)) {
                throw IoError(path + ": malformed complex column pair at '" + header[i] + "'");
            }
            labels.push_back(header[i].substr(3));
        }
    } else {
        labels.assign(header.begin() + 1, header.end());
    }
    const int m = static_cast<int>(labels.size());

    std::vector<double> times;
    std::vector<Complex> cells;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                          std::to_string(header.size()) + " fields, found " + std::to_string(fields.size()));
        }
        times.push_back(parse_double(fields[0], path, line_no));
        for (int i = 0; i < m; ++i) {
            if (complex_mode) {
                cells.emplace_back(parse_double(fields[static_cast<std::size_t>(2 * i + 1)], path, line_no),
                                   parse_double(fields[static_cast<std::size_t>(2 * i + 2)], path, line_no));
            } else {
                cells.emplace_back(parse_double(fields[static_cast<std::size_t>(i + 1)], path, line_no), 0.0);
            }
        }
    }
    if (times.size() < 2) throw IoError(path + ": need at least two data rows");

    const double dt = times[1] - times[0];
    if (dt <= 0.0) throw IoError(path + ": time column must increase");
    for (std::size_t k = 1; k < times.size(); ++k) {
        if (std::abs(times[k] - (times[0] + static_cast<double>(k) * dt)) > 1e-9 * std::max(1.0, std::abs(times[k]))) {
            throw IoError(path + ": time column is not a uniform grid at row " + std::to_string(k));
        }
    }

    SnapshotMatrix snaps;
    snaps.grid = TimeGrid{times[0], dt, static_cast<int>(times.size()) - 1};
    snaps.labels = labels;
    snaps.values.resize(m, static_cast<int>(times.size()));
    for (std::size_t k = 0; k < times.size(); ++k) {
        for (int i = 0; i < m; ++i) {
            snaps.values(i, static_cast<int>(k)) = cells[k * static_cast<std::size_t>(m) + static_cast<std::size_t>(i)];
        }
    }
    return snaps;
}

void write_spectral_csv(const std::string& path, const SpectralTimeSeries& series) {
    auto out = open_out(path);
    out << "# schema=spectral version=1\n";
    out << "k,t,branch,re_lambda_A,im_lambda_A,re_lambda_K,im_lambda_K,residual_rel,switch_flag\n";
    for (std::size_t k = 0; k < series.steps.size(); ++k) {
        const auto& step = series.steps[k];
        for (std::size_t b = 0; b < step.koopman_eigs.size(); ++b) {
            const Complex la = b < step.system_eigs.size() ? step.system_eigs[b] : Complex(0.0, 0.0);
            const Complex lk = step.koopman_eigs[b];
            out << k << "," << fmt(series.grid.time(static_cast<int>(k))) << "," << b << ","
                << fmt(la.real()) << "," << fmt(la.imag()) << "," << fmt(lk.real()) << ","
                << fmt(lk.imag()) << "," << fmt(step.residual_rel) << "," << (step.switch_flag ? 1 : 0)
                << "\n";
        }
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

std::vector<std::vector<Complex>> read_spectral_koopman_eigs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    std::vector<std::vector<Complex>> out;
    std::string line;
    int line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        const auto fields = split_csv_line(line);
        if (fields.size() != 9) {
            throw IoError(path + ":" + std::to_string(line_no) + ": expected 9 spectral fields");
        }
        const std::size_t k = static_cast<std::size_t>(parse_double(fields[0], path, line_no));
        if (out.size() <= k) out.resize(k + 1);
        out[k].emplace_back(parse_double(fields[5], path, line_no), parse_double(fields[6], path, line_no));
    }
    if (out.empty()) throw IoError(path + ": no spectral rows found");
    return out;
}

void write_residual_csv(const std::string& path, const SpectralTimeSeries& series) {
    auto out = open_out(path);
    out << "# schema=residuals version=1\n";
    out << "k,t,residual_abs,residual_rel,switch_flag\n";
    for (std::size_t k = 0; k < series.steps.size(); ++k) {
        const auto& step = series.steps[k];
        out << k << "," << fmt(series.grid.time(static_cast<int>(k))) << "," << fmt(step.residual_abs)
            << "," << fmt(step.residual_rel) << "," << (step.switch_flag ? 1 : 0) << "\n";
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

void write_ek_csv(const std::string& path, const TimeGrid& grid, const std::vector<double>& ek) {
    auto out = open_out(path);
    out << "# schema=ek version=1\n";
    out << "k,t,E_k\n";
    for (std::size_t k = 0; k < ek.size(); ++k) {
        out << k << "," << fmt(grid.time(static_cast<int>(k))) << "," << fmt(ek[k]) << "\n";
    }
    if (!out) throw IoError("failed while writing '" + path + "'");
}

}  // namespace koop
