#pragma once

#include <json.hpp>

#include "diffmean/analysis.hpp"
#include "diffmean/estimators.hpp"
#include "diffmean/experiments.hpp"
#include "diffmean/kernels.hpp"
#include "diffmean/sampling.hpp"

namespace diffmean {

using Json = nlohmann::json;

Json to_json(const TruncationPolicy& policy);
Json to_json(const KernelSpec& spec);
Json to_json(const DistributionSpec& dist);
Json to_json(const OptimizerConfig& config);
Json to_json(const EstimateReport& report);
Json to_json(const EstimatorTag& tag);
Json to_json(const ScalingTable& table);
Json to_json(const LikelihoodProfile& profile);
Json to_json(const SmearinessReport& report);
Json to_json(const TTrace& trace);

TruncationPolicy truncation_from_json(const Json& j);
KernelSpec kernel_spec_from_json(const Json& j);
OptimizerConfig optimizer_config_from_json(const Json& j);
ScalingTable scaling_table_from_json(const Json& j);

}  // namespace diffmean
