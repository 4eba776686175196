#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chi2field {

/// Invalid argument or parameter outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Base for failures of a numerical procedure on otherwise valid input.
class numerical_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A series or iterative method hit its budget before meeting its tolerance.
class convergence_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

class not_positive_definite : public numerical_error {
 public:
  explicit not_positive_definite(std::size_t pivot)
      : numerical_error("matrix is not positive definite (failing pivot " +
                        std::to_string(pivot) + ")"),
        pivot_(pivot) {}

  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class singular_matrix_error : public numerical_error {
 public:
  using numerical_error::numerical_error;
};

/// Malformed configuration or input file.
class config_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chi2field
