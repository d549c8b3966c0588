#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irisvd {

// Every error raised by the library derives from Error so callers can catch
// the whole family at once and still tell stages apart by type.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

enum class PgmErrorKind { bad_magic, malformed_header, maxval_out_of_range, truncated_data, bad_pixel };

class PgmParseError : public Error {
public:
  PgmParseError(PgmErrorKind kind, std::size_t offset, const std::string& what)
      : Error("pgm: " + what + " at byte offset " + std::to_string(offset)), kind_(kind), offset_(offset) {}

  PgmErrorKind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

private:
  PgmErrorKind kind_;
  std::size_t offset_;
};

class PupilNotFound : public Error {
public:
  PupilNotFound() : Error("pupil-not-found: no dark region reaches the minimum pupil area") {}
};

class InvalidGeometry : public Error {
public:
  using Error::Error;
};

class EdgeNotFound : public Error {
public:
  EdgeNotFound() : Error("edge-not-found: no intensity rise before the image border") {}
};

class TemplateError : public Error {
public:
  using Error::Error;
};

class InvalidSpec : public Error {
public:
  using Error::Error;
};

class DimensionMismatch : public InvalidArgument {
public:
  using InvalidArgument::InvalidArgument;
};

class DatasetError : public Error {
public:
  using Error::Error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

// Wraps a failure inside pipeline_features with the image path and stage name.
class StageError : public Error {
public:
  StageError(std::string stage, std::string path, const std::string& what)
      : Error(path + ": " + stage + ": " + what), stage_(std::move(stage)), path_(std::move(path)) {}

  const std::string& stage() const noexcept { return stage_; }
  const std::string& path() const noexcept { return path_; }

private:
  std::string stage_;
  std::string path_;
};

}  // namespace irisvd
