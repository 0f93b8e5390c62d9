#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <Eigen/Dense>

// Matrix and vector files: plain CSV, row-major, no header.
namespace covest::csv {

Eigen::MatrixXd parse_matrix(std::istream& in);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// Every number in the file, in row-major order.
Eigen::VectorXd read_vector(const std::filesystem::path& path);

/// Reads `arg` as a file when one exists at that path, otherwise as an inline
/// comma-separated list such as "4,1".
Eigen::VectorXd vector_arg(const std::string& arg);

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m, int precision = 17);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m, int precision = 17);

/// printf("%.{digits}g")
std::string format_number(double v, int digits);

}  // namespace covest::csv
