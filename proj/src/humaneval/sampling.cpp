#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>

#include "commeval/humaneval.hpp"
#include "commeval/semantic.hpp"

namespace commeval::humaneval {

SamplePlan SamplePlan::compute(std::size_t population, double z, double margin, double proportion) {
  if (population < 1) throw InvalidArgument("sample_size: population must be >= 1");
  if (!(margin > 0.0 && margin < 1.0)) throw InvalidArgument("sample_size: margin must be in (0, 1)");
  if (!(proportion > 0.0 && proportion < 1.0)) {
    throw InvalidArgument("sample_size: proportion must be in (0, 1)");
  }
  if (!(z > 0.0)) throw InvalidArgument("sample_size: z must be positive");

  SamplePlan plan{population, z, margin, proportion, 0.0, 0};
  plan.n0 = z * z * proportion * (1.0 - proportion) / (margin * margin);
  const double n = static_cast<double>(population);
  const double corrected = plan.n0 / (1.0 + (plan.n0 - 1.0) / n);
  const double rounded = std::ceil(corrected);
  plan.min_samples = static_cast<std::size_t>(std::clamp(rounded, 1.0, n));
  return plan;
}

std::size_t sample_size(std::size_t population, double z, double margin, double proportion) {
  return SamplePlan::compute(population, z, margin, proportion).min_samples;
}

double z_for_confidence(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw InvalidArgument("confidence must be in (0, 1)");
  }
  const boost::math::normal standard;
  return boost::math::quantile(standard, 1.0 - (1.0 - confidence) / 2.0);
}

std::vector<std::string> draw_sample(const EvalCorpus& corpus, std::size_t size, std::uint64_t seed) {
  if (size > corpus.size()) {
    throw InvalidArgument("draw_sample: size " + std::to_string(size) + " exceeds corpus of " +
                          std::to_string(corpus.size()));
  }
  const auto order = seeded_permutation(corpus.size(), seed);
  std::vector<std::string> ids;
  ids.reserve(size);
  for (std::size_t k = 0; k < size; ++k) ids.push_back(corpus.pairs()[order[k]].id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace commeval::humaneval
