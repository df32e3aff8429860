#include "diffsmooth/errors.hpp"

#include <sstream>

namespace diffsmooth {

namespace {
std::string unreachable_message(double sigma, double sigma_max) {
  std::ostringstream os;
  os << "smoothing level sigma=" << sigma
     << " exceeds the schedule's maximum supported sigma=" << sigma_max;
  return os.str();
}
}  // namespace

UnreachableNoiseError::UnreachableNoiseError(double sigma, double sigma_max)
    : std::runtime_error(unreachable_message(sigma, sigma_max)),
      sigma_(sigma),
      sigma_max_(sigma_max) {}

IntegrationDivergedError::IntegrationDivergedError(int step)
    : std::runtime_error("reverse-SDE integration diverged at step " +
                         std::to_string(step)),
      step_(step) {}

}  // namespace diffsmooth
