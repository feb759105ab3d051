#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace rangeal {

enum class Errc {
  MalformedScan,
  MalformedLabels,
  UnknownLabel,
  PoolTooLarge,
  StorageError,
  DegeneratePoint,
  BadParam,
  MissingInstances,
  EmptyPool,
  MissingPredictions,
  NoSupervision,
  MalformedTensor,
  BadClassId,
  UndefinedMetric,
  LevelUnreachable,
  BadConfig,
};

std::string_view errc_name(Errc code) noexcept;

/// Every failure raised by the engine carries one of the codes above so
/// callers (and tests) can branch on the kind without string matching.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what);

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace rangeal
