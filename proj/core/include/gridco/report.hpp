#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "gridco/market_env.hpp"
#include "gridco/metrics.hpp"

namespace gridco {

struct BidViolation {
    std::string run_id;
    std::size_t episode = 0;
    std::size_t t = 0;
    std::string agent;
    std::string kind;  // "spread" or "step"
    double value = 0.0;  // offending max/min or consecutive ratio
};

// Checks every logged episode against the spread and step limits. Each
// series starts from the agent's marginal cost, the bid at reset.
// Requires step records; throws ValidationError when the log has none.
std::vector<BidViolation> check_bid_constraints(const MetricsLog& log, const BidLimits& limits = {},
                                                double tol = 1e-9, const std::string& run_id = {});

struct ReportResult {
    std::vector<std::filesystem::path> files;
    std::vector<BidViolation> violations;
    std::size_t runs = 0;
    std::size_t steps_checked = 0;
};

// Writes breakdown.csv, bids.csv and mu.csv for the given run directories
// into `out_dir`, plus comparison.csv when there are at least two. Throws
// ParseError when a directory holds no metrics.jsonl.
ReportResult write_report(const std::vector<std::filesystem::path>& run_dirs, const std::filesystem::path& out_dir,
                          const BidLimits& limits = {});

}  // namespace gridco
