#include "bype/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bype/errors.hpp"

namespace bype::train {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void MetricsLog::add(std::size_t epoch, const std::string& phase,
                     const std::string& metric, double value) {
    rows_.push_back({epoch, phase, metric, format_double(value), 0.0, false});
}

void MetricsLog::add(std::size_t epoch, const std::string& phase,
                     const std::string& metric, const std::string& value) {
    rows_.push_back({epoch, phase, metric, value, 0.0, false});
}

void MetricsLog::add_timing(std::size_t epoch, const std::string& phase,
                            double seconds) {
    rows_.push_back({epoch, phase, "time", "", seconds, true});
}

namespace {
void append_rows(std::ostringstream& os, const std::vector<MetricsRow>& rows,
                 bool timing) {
    os << "epoch,phase,metric,value,seconds\n";
    for (const auto& r : rows) {
        if (r.timing != timing) continue;
        os << r.epoch << ',' << r.phase << ',' << r.metric << ',' << r.value
           << ',';
        if (r.timing) os << format_double(r.seconds);
        os << '\n';
    }
}
} // namespace

std::string MetricsLog::metrics_csv() const {
    std::ostringstream os;
    append_rows(os, rows_, false);
    return os.str();
}

std::string MetricsLog::timings_csv() const {
    std::ostringstream os;
    append_rows(os, rows_, true);
    return os.str();
}

void MetricsLog::write(const std::string& dir) const {
    std::filesystem::create_directories(dir);
    for (const auto& [name, text] :
         {std::pair{std::string("metrics.csv"), metrics_csv()},
          std::pair{std::string("timings.csv"), timings_csv()}}) {
        std::ofstream os(dir + "/" + name, std::ios::trunc);
        if (!os) throw FormatError("cannot write " + dir + "/" + name);
        os << text;
    }
}

std::vector<MetricsRow> MetricsLog::select(const std::string& phase,
                                           const std::string& metric) const {
    std::vector<MetricsRow> out;
    for (const auto& r : rows_) {
        if (!phase.empty() && r.phase != phase) continue;
        if (!metric.empty() && r.metric != metric) continue;
        out.push_back(r);
    }
    return out;
}

} // namespace bype::train
