#include "hems/data.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace hems::data {

namespace {

// Days from civil date (Howard Hinnant's algorithm).
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

Minutes parse_timestamp(const std::string& iso) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0;
    if (std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d", &y, &mo, &d, &h, &mi) != 5) {
        throw LoadError("bad timestamp: '" + iso + "'");
    }
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 || mi > 59) {
        throw LoadError("timestamp out of range: '" + iso + "'");
    }
    return days_from_civil(y, mo, d) * 1440 + h * 60 + mi;
}

std::string format_timestamp(Minutes m) {
    std::int64_t days = m / 1440;
    int rem = static_cast<int>(m % 1440);
    if (rem < 0) {
        rem += 1440;
        --days;
    }
    int y, mo, d;
    civil_from_days(days, y, mo, d);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d", y, mo, d, rem / 60,
                  rem % 60);
    return buf;
}

TimeSeries load_series(const std::string& path, const std::string& expected_units,
                       int expected_slot_seconds) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open series file: " + path);

    TimeSeries s;
    s.slot_seconds = expected_slot_seconds;
    std::string line;
    bool have_units = false, have_slot = false, have_header = false;
    std::size_t row = 0;
    Minutes expect_next = 0;
    const Minutes step = expected_slot_seconds / 60;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::string key, value;
            const auto colon = line.find(':');
            if (colon != std::string::npos) {
                key = line.substr(1, colon - 1);
                value = line.substr(colon + 1);
                auto trim = [](std::string& t) {
                    t.erase(0, t.find_first_not_of(' '));
                    t.erase(t.find_last_not_of(' ') + 1);
                };
                trim(key);
                trim(value);
                if (key == "units") {
                    s.units = value;
                    have_units = true;
                } else if (key == "slot_seconds") {
                    s.slot_seconds = std::stoi(value);
                    have_slot = true;
                }
            }
            continue;
        }
        if (!have_header) {
            if (line.rfind("timestamp", 0) != 0) {
                throw LoadError(path + ": expected 'timestamp,value' header, got '" + line +
                                "'");
            }
            have_header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw LoadError(path + ": malformed row " + std::to_string(row + 1) + ": '" +
                            line + "'");
        }
        const std::string ts = line.substr(0, comma);
        const Minutes t = parse_timestamp(ts);
        if (row == 0) {
            s.start = t;
        } else if (t == expect_next - step) {
            throw LoadError(path + ": duplicate timestamp " + ts);
        } else if (t != expect_next) {
            throw LoadError(path + ": gap or misordered timestamp at " +
                            format_timestamp(expect_next) + " (got " + ts + ")");
        }
        expect_next = t + step;
        double v = 0.0;
        try {
            v = std::stod(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw LoadError(path + ": bad value in row " + std::to_string(row + 1));
        }
        if (!std::isfinite(v)) {
            throw LoadError(path + ": non-finite value at " + ts);
        }
        s.values.push_back(v);
        ++row;
    }

    if (!have_units) throw LoadError(path + ": missing '# units:' header");
    if (!have_slot) throw LoadError(path + ": missing '# slot_seconds:' header");
    if (s.units != expected_units) {
        throw LoadError(path + ": units '" + s.units + "', expected '" + expected_units +
                        "'");
    }
    if (s.slot_seconds != expected_slot_seconds) {
        throw LoadError(path + ": slot_seconds " + std::to_string(s.slot_seconds) +
                        ", expected " + std::to_string(expected_slot_seconds));
    }
    if (s.values.empty()) throw LoadError(path + ": no data rows");
    if (s.units != "degC") {
        for (std::size_t k = 0; k < s.values.size(); ++k) {
            if (s.values[k] < 0.0) {
                throw LoadError(path + ": negative value at " +
                                format_timestamp(s.timestamp_at(k)));
            }
        }
    }
    return s;
}

void save_series(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw LoadError("cannot write series file: " + path);
    out << "# units: " << series.units << "\n";
    out << "# slot_seconds: " << series.slot_seconds << "\n";
    out << "timestamp,value\n";
    char buf[40];
    for (std::size_t k = 0; k < series.values.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.17g", series.values[k]);
        out << format_timestamp(series.timestamp_at(k)) << ',' << buf << "\n";
    }
}

SeriesSummary summarize_series(const TimeSeries& series) {
    SeriesSummary sum;
    if (series.values.empty()) return sum;
    sum.min = sum.max = series.values[0];
    double total = 0.0;
    for (double v : series.values) {
        sum.min = std::min(sum.min, v);
        sum.max = std::max(sum.max, v);
        total += v;
    }
    sum.mean = total / static_cast<double>(series.values.size());
    return sum;
}

void validate(const TariffSchedule& schedule) {
    if (schedule.windows.empty()) {
        throw std::invalid_argument("tariff: at least one window required");
    }
    if (!(schedule.feed_in > 0.0)) {
        throw std::invalid_argument("tariff: feed-in must be positive");
    }
    int prev = -1;
    for (const auto& w : schedule.windows) {
        if (w.start_minute < 0 || w.start_minute >= 1440) {
            throw std::invalid_argument("tariff: window start outside the day");
        }
        if (w.start_minute <= prev) {
            throw std::invalid_argument("tariff: windows must be sorted and distinct");
        }
        prev = w.start_minute;
        if (!(w.price > 0.0)) {
            throw std::invalid_argument("tariff: import price must be positive");
        }
        if (w.price <= schedule.feed_in) {
            throw std::invalid_argument(
                "tariff: every import price must exceed the feed-in tariff");
        }
    }
}

double tariff_price_at_minute(const TariffSchedule& schedule, int minute) {
    // The window with the greatest start <= minute; before the first start the
    // schedule wraps around to the last window of the day.
    const auto& w = schedule.windows;
    double price = w.back().price;
    for (const auto& win : w) {
        if (win.start_minute <= minute) {
            price = win.price;
        } else {
            break;
        }
    }
    return price;
}

double tariff_price(const TariffSchedule& schedule, Minutes timestamp) {
    return tariff_price_at_minute(schedule, minute_of_day(timestamp));
}

DemandMarkovModel fit_markov_chain(const TimeSeries& demand, int bin_count) {
    if (bin_count < 1) throw std::invalid_argument("markov: bin count must be >= 1");
    const int spd = 86400 / demand.slot_seconds;
    const std::size_t min_len = static_cast<std::size_t>(bin_count) * spd * 10;
    if (demand.size() < min_len) {
        throw std::invalid_argument("markov: series too short for " +
                                    std::to_string(bin_count) + " bins (need >= " +
                                    std::to_string(min_len) + " slots)");
    }

    DemandMarkovModel model;
    model.slots_per_day = spd;
    model.slot_seconds = demand.slot_seconds;
    model.start = demand.start;

    std::vector<double> sorted = demand.values;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        model.degenerate = true;
        model.representatives = {sorted.front()};
        model.initial = {1.0};
        model.rows.assign(static_cast<std::size_t>(spd), {1.0});
        return model;
    }

    // Quantile bin edges; a value belongs to the first bin whose upper edge
    // is above it.
    std::vector<double> upper(bin_count);
    for (int b = 0; b < bin_count; ++b) {
        const std::size_t idx = std::min(
            sorted.size() - 1,
            static_cast<std::size_t>(std::ceil(sorted.size() *
                                               static_cast<double>(b + 1) / bin_count)) -
                1);
        upper[b] = sorted[idx];
    }
    upper.back() = sorted.back();
    auto bin_of = [&](double v) {
        const auto it = std::lower_bound(upper.begin(), upper.end(), v);
        return static_cast<int>(std::min<std::ptrdiff_t>(it - upper.begin(), bin_count - 1));
    };

    // Representatives: mean of the source values landing in a bin.
    std::vector<double> rep_sum(bin_count, 0.0);
    std::vector<std::size_t> rep_n(bin_count, 0);
    for (double v : demand.values) {
        const int b = bin_of(v);
        rep_sum[b] += v;
        ++rep_n[b];
    }
    model.representatives.resize(bin_count);
    for (int b = 0; b < bin_count; ++b) {
        model.representatives[b] = rep_n[b] > 0 ? rep_sum[b] / rep_n[b] : upper[b];
    }

    const int start_slot = minute_of_day(demand.start) / (demand.slot_seconds / 60);
    model.initial.assign(bin_count, 0.0);
    model.rows.assign(static_cast<std::size_t>(spd) * bin_count,
                      std::vector<double>(bin_count, 0.0));
    for (std::size_t k = 0; k + 1 < demand.size(); ++k) {
        const int slot = static_cast<int>((start_slot + k) % spd);
        const int from = bin_of(demand.values[k]);
        const int to = bin_of(demand.values[k + 1]);
        model.rows[static_cast<std::size_t>(slot) * bin_count + from][to] += 1.0;
        if (slot == 0) model.initial[from] += 1.0;
    }

    // Row-normalize with additive smoothing.
    for (auto& row : model.rows) {
        double total = 0.0;
        for (double& c : row) {
            c += 1e-6;
            total += c;
        }
        for (double& c : row) c /= total;
    }
    double init_total = 0.0;
    for (double& c : model.initial) {
        c += 1e-6;
        init_total += c;
    }
    for (double& c : model.initial) c /= init_total;
    return model;
}

TimeSeries sample_profile(const DemandMarkovModel& model, int days, std::uint64_t seed) {
    if (days < 0) throw std::invalid_argument("markov: days must be non-negative");
    TimeSeries out;
    out.units = "kWh";
    out.slot_seconds = model.slot_seconds;
    out.start = model.start;
    out.values.reserve(static_cast<std::size_t>(days) * model.slots_per_day);

    std::mt19937_64 rng(seed);
    auto draw = [&rng](const std::vector<double>& dist) {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double r = u(rng);
        for (std::size_t i = 0; i < dist.size(); ++i) {
            r -= dist[i];
            if (r <= 0.0) return static_cast<int>(i);
        }
        return static_cast<int>(dist.size()) - 1;
    };

    int bin = draw(model.initial);
    const std::size_t total = static_cast<std::size_t>(days) * model.slots_per_day;
    for (std::size_t k = 0; k < total; ++k) {
        out.values.push_back(model.representatives[bin]);
        const int slot = static_cast<int>(k % model.slots_per_day);
        bin = draw(model.rows[static_cast<std::size_t>(slot) * model.bins() + bin]);
    }
    return out;
}

double scale_to_annual_kwh(TimeSeries& series, double target_kwh) {
    if (series.values.empty()) throw std::invalid_argument("scale: empty series");
    double total = std::accumulate(series.values.begin(), series.values.end(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("scale: series total must be positive");
    const double days = series.size() * series.slot_seconds / 86400.0;
    const double annual = total * 365.0 / days;
    const double mult = target_kwh / annual;
    for (double& v : series.values) v *= mult;
    return mult;
}

}  // namespace hems::data
