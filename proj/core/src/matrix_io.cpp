#include "oco/matrix_io.hpp"

#include <cctype>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <vector>

namespace oco::model {

namespace {

std::string strip_comment(const std::string& line) {
    const auto pos = line.find('#');
    return pos == std::string::npos ? line : line.substr(0, pos);
}

bool is_matrix_key(const std::string& tok) { return tok == "A" || tok == "B" || tok == "C" || tok == "D"; }
bool is_scalar_key(const std::string& tok) { return tok == "p" || tok == "q" || tok == "d" || tok == "name"; }

Matrix to_matrix(const std::vector<std::vector<double>>& rows, const std::string& key, int line) {
    if (rows.empty()) throw MatrixFileError("section " + key + " is empty", line);
    const std::size_t cols = rows.front().size();
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols) throw MatrixFileError("ragged rows in section " + key, line);
        for (std::size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

}  // namespace

AlgorithmRealization read_realization(std::istream& in) {
    AlgorithmRealization r;
    r.name = "custom";
    std::map<std::string, Matrix> mats;
    std::map<std::string, bool> seen;
    std::string current;
    int current_line = 0;
    std::vector<std::vector<double>> rows;
    std::string raw;
    int lineno = 0;

    auto flush = [&]() {
        if (!current.empty()) {
            mats[current] = to_matrix(rows, current, current_line);
            rows.clear();
            current.clear();
        }
    };

    while (std::getline(in, raw)) {
        ++lineno;
        std::istringstream ls(strip_comment(raw));
        std::string first;
        if (!(ls >> first)) continue;
        if (is_matrix_key(first)) {
            std::string extra;
            if (ls >> extra) throw MatrixFileError("unexpected token after section " + first, lineno);
            flush();
            if (seen[first]) throw MatrixFileError("duplicate section " + first, lineno);
            seen[first] = true;
            current = first;
            current_line = lineno;
            continue;
        }
        if (is_scalar_key(first)) {
            flush();
            if (seen[first]) throw MatrixFileError("duplicate key " + first, lineno);
            seen[first] = true;
            if (first == "name") {
                std::string rest;
                std::getline(ls >> std::ws, rest);
                while (!rest.empty() && std::isspace(static_cast<unsigned char>(rest.back()))) rest.pop_back();
                if (rest.empty()) throw MatrixFileError("empty name", lineno);
                r.name = rest;
            } else {
                long long v = 0;
                std::string extra;
                if (!(ls >> v) || (ls >> extra)) throw MatrixFileError("expected one integer after " + first, lineno);
                if (first == "p") r.p = static_cast<int>(v);
                if (first == "q") r.q = static_cast<int>(v);
                if (first == "d") r.d = static_cast<int>(v);
            }
            continue;
        }
        if (current.empty()) throw MatrixFileError("unknown keyword '" + first + "'", lineno);
        std::vector<double> row;
        std::istringstream rs(strip_comment(raw));
        std::string tok;
        while (rs >> tok) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size()) throw MatrixFileError("not a number: '" + tok + "'", lineno);
            row.push_back(v);
        }
        rows.push_back(std::move(row));
    }
    flush();

    for (const char* key : {"A", "B", "C", "D"}) {
        if (!mats.count(key)) throw MatrixFileError(std::string("missing section ") + key, 0);
    }
    if (!seen["p"]) throw MatrixFileError("missing key p", 0);
    r.A = mats["A"];
    r.B = mats["B"];
    r.C = mats["C"];
    r.D = mats["D"];
    if (!seen["q"]) r.q = 0;
    try {
        r.check_shapes();
    } catch (const std::invalid_argument& e) {
        throw MatrixFileError(e.what(), 0);
    }
    return r;
}

AlgorithmRealization read_realization_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MatrixFileError("cannot open '" + path + "'", 0);
    return read_realization(in);
}

void write_realization(std::ostream& out, const AlgorithmRealization& r) {
    const auto old_prec = out.precision(std::numeric_limits<double>::max_digits10);
    out << "name " << r.name << '\n' << "p " << r.p << '\n' << "q " << r.q << '\n' << "d " << r.d << '\n';
    const std::pair<const char*, const Matrix*> secs[] = {{"A", &r.A}, {"B", &r.B}, {"C", &r.C}, {"D", &r.D}};
    for (const auto& [key, m] : secs) {
        out << key << '\n';
        for (Eigen::Index i = 0; i < m->rows(); ++i) {
            for (Eigen::Index j = 0; j < m->cols(); ++j) out << (j ? " " : "") << (*m)(i, j);
            out << '\n';
        }
    }
    out.precision(old_prec);
}

}  // namespace oco::model
