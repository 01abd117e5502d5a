#pragma once

#include <stdexcept>
#include <string>

namespace disgan {

/// Base class for every error the library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- contract violations on shapes and configuration ---
struct ShapeError : Error { using Error::Error; };
struct OddExtent : ShapeError { using ShapeError::ShapeError; };
struct ShapeMismatch : ShapeError { using ShapeError::ShapeError; };
struct InvalidSize : ShapeError { using ShapeError::ShapeError; };
struct VolumeTooSmall : ShapeError { using ShapeError::ShapeError; };
struct ConfigError : Error { using Error::Error; };
struct EmptyDataset : Error { using Error::Error; };

// --- degenerate data ---
struct DegenerateVolume : Error { using Error::Error; };
struct DegenerateReference : Error { using Error::Error; };
struct InvalidSigma : Error { using Error::Error; };

// --- numerical aborts (CLI exit code 3) ---
struct NumericalError : Error { using Error::Error; };
struct InvalidScores : NumericalError { using NumericalError::NumericalError; };
struct InvalidLoss : NumericalError { using NumericalError::NumericalError; };
struct NonFiniteLoss : NumericalError { using NumericalError::NumericalError; };

// --- file format / parse errors (CLI exit code 2) ---
struct ParseError : Error { using Error::Error; };
struct BadMagic : ParseError { using ParseError::ParseError; };
struct UnsupportedFormat : ParseError { using ParseError::ParseError; };
struct UnsupportedDatatype : ParseError { using ParseError::ParseError; };
struct TruncatedFile : ParseError { using ParseError::ParseError; };
struct IncompatibleCheckpoint : ParseError { using ParseError::ParseError; };

}  // namespace disgan
