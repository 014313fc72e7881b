#ifndef NMFEB_ERRORS_HPP
#define NMFEB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nmfeb {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

struct InvalidPrior : Error {
  using Error::Error;
};

/// Column i of the design is identically zero (d_i = 0).
struct ZeroColumn : Error {
  explicit ZeroColumn(int col)
      : Error("design column " + std::to_string(col) + " is identically zero"),
        column(col) {}
  int column;
};

struct RankDeficient : Error {
  using Error::Error;
};

struct DegeneratePrior : Error {
  using Error::Error;
};

struct MeanOutOfRange : Error {
  using Error::Error;
};

/// Brute-force enumeration guard tripped (k^p too large).
struct TooLarge : Error {
  using Error::Error;
};

struct NotSPD : Error {
  using Error::Error;
};

struct ParseError : Error {
  using Error::Error;
};

}  // namespace nmfeb

#endif
