#include "rangeal/error.hpp"

namespace rangeal {

std::string_view errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::MalformedScan: return "MalformedScan";
    case Errc::MalformedLabels: return "MalformedLabels";
    case Errc::UnknownLabel: return "UnknownLabel";
    case Errc::PoolTooLarge: return "PoolTooLarge";
    case Errc::StorageError: return "StorageError";
    case Errc::DegeneratePoint: return "DegeneratePoint";
    case Errc::BadParam: return "BadParam";
    case Errc::MissingInstances: return "MissingInstances";
    case Errc::EmptyPool: return "EmptyPool";
    case Errc::MissingPredictions: return "MissingPredictions";
    case Errc::NoSupervision: return "NoSupervision";
    case Errc::MalformedTensor: return "MalformedTensor";
    case Errc::BadClassId: return "BadClassId";
    case Errc::UndefinedMetric: return "UndefinedMetric";
    case Errc::LevelUnreachable: return "LevelUnreachable";
    case Errc::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

}  // namespace rangeal
