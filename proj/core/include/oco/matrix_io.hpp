#pragma once

#include "oco/algorithm_model.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace oco::model {

// Plain-text realization format:
//
//   # comment
//   name my-method
//   p 1
//   q 1
//   d 1
//   A
//   1
//   B
//   -0.1 -0.1
//   C
//   1
//   1
//   D
//   0 0
//   -0.1 -0.1
//
// Matrix sections start with a line holding only the section letter and
// run until the next keyword. Rows are whitespace-separated reals.
class MatrixFileError : public std::runtime_error {
public:
    MatrixFileError(const std::string& what, int line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

AlgorithmRealization read_realization(std::istream& in);
AlgorithmRealization read_realization_file(const std::string& path);
void write_realization(std::ostream& out, const AlgorithmRealization& r);

}  // namespace oco::model
