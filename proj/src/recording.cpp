#include "eegwl/recording.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "eegwl/csv.hpp"
#include "eegwl/errors.hpp"

namespace eegwl {

void Recording::validate() const {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be > 0");
  const std::size_t n = n_samples();
  for (const auto& ch : data)
    if (ch.size() != n) throw ValidationError("channels have unequal length");
  if (channels.size() != data.size())
    throw ValidationError("channel name count does not match data");
  std::size_t prev_end = 0;
  for (const auto& g : gaps) {
    if (g.begin >= g.end) throw ValidationError("empty or inverted gap");
    if (g.begin < prev_end) throw ValidationError("gaps unsorted or overlapping");
    if (g.end > n) throw ValidationError("gap out of bounds");
    prev_end = g.end;
  }
}

std::vector<GapInterval> Recording::segments() const {
  std::vector<GapInterval> segs;
  std::size_t pos = 0;
  const std::size_t n = n_samples();
  for (const auto& g : gaps) {
    if (g.begin > pos) segs.push_back({pos, g.begin});
    pos = g.end;
  }
  if (pos < n) segs.push_back({pos, n});
  return segs;
}

bool Recording::overlaps_gap(std::size_t begin, std::size_t end) const {
  for (const auto& g : gaps)
    if (g.begin < end && begin < g.end) return true;
  return false;
}

Recording segment_gaps(const std::vector<double>& timestamps_s,
                       const std::vector<std::vector<double>>& channel_data,
                       const std::vector<std::string>& channel_names,
                       double sample_rate, double max_gap_s) {
  if (sample_rate <= 0) throw ValidationError("sample_rate must be > 0");
  if (channel_data.empty()) throw ValidationError("no channels");
  const std::size_t n = timestamps_s.size();
  for (const auto& ch : channel_data)
    if (ch.size() != n) throw ValidationError("channel length != timestamp count");

  Recording rec;
  rec.sample_rate = sample_rate;
  rec.channels = channel_names;
  rec.data.resize(channel_data.size());
  if (n == 0) return rec;

  const double dt = 1.0 / sample_rate;
  for (std::size_t i = 1; i < n; ++i)
    if (timestamps_s[i] < timestamps_s[i - 1])
      throw DataError("timestamps decrease at sample " + std::to_string(i));

  for (auto& ch : rec.data) ch.reserve(n);
  std::size_t out_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double hole = timestamps_s[i] - timestamps_s[i - 1];
      if (hole > max_gap_s) {
        // zero-fill the dropout at the nominal rate
        const auto missing =
            static_cast<std::size_t>(std::llround(hole / dt)) - 1;
        if (missing > 0) {
          rec.gaps.push_back({out_pos, out_pos + missing});
          for (auto& ch : rec.data) ch.insert(ch.end(), missing, 0.0);
          out_pos += missing;
        }
      }
    }
    for (std::size_t c = 0; c < channel_data.size(); ++c)
      rec.data[c].push_back(channel_data[c][i]);
    ++out_pos;
  }
  rec.validate();
  return rec;
}

namespace {
std::string gaps_sidecar_path(const std::string& path) {
  return path + ".gaps.json";
}
}  // namespace

Recording load_recording_csv(const std::string& path, double sample_rate,
                             double max_gap_s,
                             std::vector<std::string>* warnings) {
  const CsvTable table = read_csv(path);
  const int tcol = table.column("timestamp_s");
  if (tcol < 0) throw ValidationError(path + ": missing timestamp_s column");

  std::vector<std::string> names;
  std::vector<int> cols;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (static_cast<int>(i) == tcol) continue;
    const std::string& name = table.header[i];
    if (name == "AF7" || name == "AF8") {
      names.push_back(name);
      cols.push_back(static_cast<int>(i));
    } else if (warnings) {
      warnings->push_back(path + ": ignoring channel " + name);
    }
  }
  if (names.empty()) throw ValidationError(path + ": no AF7/AF8 channels");

  std::vector<double> ts;
  std::vector<std::vector<double>> chans(names.size());
  ts.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ts.push_back(std::stod(row.at(tcol)));
    for (std::size_t c = 0; c < cols.size(); ++c)
      chans[c].push_back(std::stod(row.at(cols[c])));
  }
  Recording rec = segment_gaps(ts, chans, names, sample_rate, max_gap_s);

  // merge sidecar gap annotations when present
  std::ifstream side(gaps_sidecar_path(path));
  if (side) {
    const auto j = nlohmann::json::parse(side);
    std::vector<GapInterval> merged = rec.gaps;
    for (const auto& g : j) {
      const auto b = static_cast<std::size_t>(
          std::llround(g.at(0).get<double>() * sample_rate));
      const auto e = static_cast<std::size_t>(
          std::llround(g.at(1).get<double>() * sample_rate));
      if (e > b && e <= rec.n_samples()) merged.push_back({b, e});
    }
    std::sort(merged.begin(), merged.end(),
              [](const GapInterval& a, const GapInterval& b) {
                return a.begin < b.begin;
              });
    std::vector<GapInterval> out;
    for (const auto& g : merged) {
      if (!out.empty() && g.begin <= out.back().end)
        out.back().end = std::max(out.back().end, g.end);
      else
        out.push_back(g);
    }
    rec.gaps = out;
    rec.validate();
  }
  return rec;
}

void save_recording_csv(const Recording& rec, const std::string& path) {
  rec.validate();
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write " + path);
  out << "timestamp_s";
  for (const auto& name : rec.channels) out << ',' << name;
  out << '\n';
  const double dt = 1.0 / rec.sample_rate;
  for (std::size_t i = 0; i < rec.n_samples(); ++i) {
    out << format_double(i * dt);
    for (const auto& ch : rec.data) out << ',' << format_double(ch[i]);
    out << '\n';
  }

  nlohmann::json j = nlohmann::json::array();
  for (const auto& g : rec.gaps)
    j.push_back({g.begin / rec.sample_rate, g.end / rec.sample_rate});
  std::ofstream side(gaps_sidecar_path(path));
  side << j.dump() << '\n';
}

}  // namespace eegwl
