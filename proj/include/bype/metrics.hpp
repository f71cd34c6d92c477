#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace bype::train {

// Append-only run log, schema: epoch,phase,metric,value,seconds.
// Metric rows are fully determined by (config, seed) and go to metrics.csv;
// wall-clock rows go to timings.csv so replaying a run stays byte-identical.
struct MetricsRow {
    std::size_t epoch = 0;
    std::string phase;
    std::string metric;
    std::string value;
    double seconds = 0.0;
    bool timing = false;
};

class MetricsLog {
  public:
    void add(std::size_t epoch, const std::string& phase,
             const std::string& metric, double value);
    void add(std::size_t epoch, const std::string& phase,
             const std::string& metric, const std::string& value);
    void add_timing(std::size_t epoch, const std::string& phase, double seconds);

    const std::vector<MetricsRow>& rows() const { return rows_; }

    std::string metrics_csv() const; // deterministic rows
    std::string timings_csv() const; // wall-clock rows
    void write(const std::string& dir) const;

    // Rows matching (phase, metric); empty strings match anything.
    std::vector<MetricsRow> select(const std::string& phase,
                                   const std::string& metric) const;

  private:
    std::vector<MetricsRow> rows_;
};

std::string format_double(double v); // shortest round-trippable decimal

} // namespace bype::train
