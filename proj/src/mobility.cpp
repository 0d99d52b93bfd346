#include "odfl/mobility.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "odfl/domain.hpp"
#include "odfl/rng.hpp"

namespace odfl {

using nlohmann::json;

namespace {

// Users only ever move between their favorites: mostly along their routine,
// otherwise to one of the other favorites.
constexpr double kRoutineProb = 0.85;
constexpr double kFavoriteProb = 0.15;
constexpr double kSecondsPerDay = 86400.0;

enum StreamTag : std::uint64_t { kWorldStream = 1, kUserStream, kTraceStream, kSplitStream };

// Days since 1970-01-01 for a proleptic Gregorian date.
int days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const int yoe = y - era * 400;
  const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + doe - 719468;
}

void civil_from_days(int z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const int doe = z - era * 146097;
  const int yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const int mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = yoe + era * 400 + (m <= 2);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

int sample_row(const Eigen::RowVectorXd& weights, Rng& rng) {
  const double total = weights.sum();
  double u = rng.uniform() * total;
  for (Eigen::Index k = 0; k < weights.size(); ++k) {
    u -= weights[k];
    if (u < 0) return static_cast<int>(k);
  }
  return static_cast<int>(weights.size() - 1);
}

}  // namespace

void to_json(json& j, const WorldConfig& c) {
  j = json{{"user_count", c.user_count},   {"place_count", c.place_count},
           {"area_count", c.area_count},   {"records_min", c.records_min},
           {"records_max", c.records_max}, {"trace_days", c.trace_days},
           {"seed", c.seed}};
}

void from_json(const json& j, WorldConfig& c) {
  WorldConfig d;
  c.user_count = j.value("user_count", d.user_count);
  c.place_count = j.value("place_count", d.place_count);
  c.area_count = j.value("area_count", d.area_count);
  c.records_min = j.value("records_min", d.records_min);
  c.records_max = j.value("records_max", d.records_max);
  c.trace_days = j.value("trace_days", d.trace_days);
  c.seed = j.value("seed", d.seed);
}

void validate(const WorldConfig& c) {
  if (c.user_count < 1) throw std::invalid_argument("user_count must be >= 1");
  if (c.area_count < 1) throw std::invalid_argument("area_count must be >= 1");
  if (c.place_count < c.area_count) {
    throw std::invalid_argument("place_count must be >= area_count");
  }
  if (c.records_min < 1) throw std::invalid_argument("records_min must be >= 1");
  if (c.records_min > c.records_max) {
    throw std::invalid_argument("records_min must be <= records_max");
  }
  if (c.trace_days < 1) throw std::invalid_argument("trace_days must be >= 1");
}

int feature_width(const WorldConfig& cfg) {
  return cfg.place_count + cfg.area_count + 3;
}

std::vector<int> World::places_in_area(int area) const {
  std::vector<int> out;
  for (int p = 0; p < static_cast<int>(place_area.size()); ++p) {
    if (place_area[p] == area) out.push_back(p);
  }
  return out;
}

World generate_world(const WorldConfig& cfg) {
  validate(cfg);
  World world;
  world.config = cfg;

  Rng rng(derive_seed(cfg.seed, {kWorldStream}));
  std::vector<int> order(cfg.place_count);
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  world.place_area.assign(cfg.place_count, 0);
  for (int k = 0; k < cfg.place_count; ++k) {
    world.place_area[order[k]] = k % cfg.area_count;
  }

  // A city-wide tour visits areas one after another.  Every user's routine is
  // a stretch of it starting in their home area, so routines overlap across
  // users while each user stays concentrated on a few places.
  std::vector<int> area_order(cfg.area_count);
  std::iota(area_order.begin(), area_order.end(), 0);
  rng.shuffle(area_order);
  std::vector<int> tour;
  for (int a : area_order) {
    auto in_area = world.places_in_area(a);
    rng.shuffle(in_area);
    tour.insert(tour.end(), in_area.begin(), in_area.end());
  }

  for (int u = 0; u < cfg.user_count; ++u) {
    Rng urng(derive_seed(cfg.seed, {kUserStream, static_cast<std::uint64_t>(u)}));
    UserModel user;
    user.user_id = u;
    user.home_area = static_cast<int>(urng.below(cfg.area_count));
    user.record_count =
        static_cast<int>(urng.range(cfg.records_min, cfg.records_max));

    const int k = static_cast<int>(
        urng.range(std::min(3, cfg.place_count), std::min(6, cfg.place_count)));
    // The routine covers the home area first and spills into the next one.
    const int start = static_cast<int>(
        std::find_if(tour.begin(), tour.end(),
                     [&](int p) { return world.place_area[p] == user.home_area; }) -
        tour.begin());
    for (int i = 0; i < k; ++i) {
      user.favorites.push_back(tour[(start + i) % cfg.place_count]);
    }

    const int fav_count = static_cast<int>(user.favorites.size());
    user.transitions = Eigen::MatrixXd::Zero(cfg.place_count, cfg.place_count);
    for (int from = 0; from < cfg.place_count; ++from) {
      const auto it = std::find(user.favorites.begin(), user.favorites.end(), from);
      std::vector<double> w(fav_count);
      for (auto& x : w) x = urng.uniform(0.2, 1.0);
      if (it != user.favorites.end()) {
        const int pos = static_cast<int>(it - user.favorites.begin());
        const int next = (pos + 1) % fav_count;
        w[next] = 0.0;
        const double mass = std::accumulate(w.begin(), w.end(), 0.0);
        for (int f = 0; f < fav_count; ++f) {
          user.transitions(from, user.favorites[f]) +=
              f == next ? kRoutineProb : kFavoriteProb * w[f] / mass;
        }
      } else {
        const double mass = std::accumulate(w.begin(), w.end(), 0.0);
        for (int f = 0; f < fav_count; ++f) {
          user.transitions(from, user.favorites[f]) += w[f] / mass;
        }
      }
    }
    world.users.push_back(std::move(user));
  }
  return world;
}

std::vector<VisitRecord> generate_traces(const World& world) {
  const auto& cfg = world.config;
  const int epoch_day =
      days_from_civil(kTraceStartYear, kTraceStartMonth, kTraceStartDay);
  const double window = cfg.trace_days * kSecondsPerDay;
  std::vector<VisitRecord> out;

  for (const auto& user : world.users) {
    Rng rng(derive_seed(cfg.seed,
                        {kTraceStream, static_cast<std::uint64_t>(user.user_id)}));
    // One extra visit supplies the label of the last emitted record.
    const int visits = user.record_count + 1;
    std::vector<double> starts(visits);
    for (auto& s : starts) s = rng.uniform(0.0, window);
    std::sort(starts.begin(), starts.end());

    std::vector<VisitRecord> recs(visits);
    int place = user.favorites[rng.below(user.favorites.size())];
    for (int v = 0; v < visits; ++v) {
      auto& r = recs[v];
      r.user_id = user.user_id;
      r.place_id = place;
      r.area_id = world.place_area[place];
      r.start_secs = starts[v];
      const int day = epoch_day + static_cast<int>(starts[v] / kSecondsPerDay);
      civil_from_days(day, r.year, r.month, r.day);
      const int weekday = ((day % 7) + 11) % 7;  // 0 = Sunday
      r.weekend = weekday == 0 || weekday == 6;
      r.duration_secs = std::exp(std::log(kMedianDurationSecs) +
                                 kDurationLogSigma * rng.normal());

      Eigen::RowVectorXd row = user.transitions.row(place);
      if (r.weekend) {
        for (int p = 0; p < cfg.place_count; ++p) {
          if (world.place_area[p] != user.home_area) row[p] *= kWeekendAwayBias;
        }
      }
      place = sample_row(row, rng);
    }
    for (int v = 0; v + 1 < visits; ++v) recs[v].next_place_id = recs[v + 1].place_id;
    recs.pop_back();

    std::map<std::tuple<int, int, int>, int> monthly;
    for (const auto& r : recs) ++monthly[{r.place_id, r.year, r.month}];
    for (auto& r : recs) {
      r.visit_rate = monthly[{r.place_id, r.year, r.month}];
    }
    out.insert(out.end(), recs.begin(), recs.end());
  }
  return out;
}

Datasets build_datasets(const World& world,
                        const std::vector<VisitRecord>& traces) {
  const auto& cfg = world.config;
  Datasets data;
  data.clients.resize(cfg.user_count);
  data.summaries.resize(cfg.user_count);

  std::vector<std::vector<const VisitRecord*>> by_user(cfg.user_count);
  for (const auto& r : traces) by_user.at(r.user_id).push_back(&r);

  const int width = feature_width(cfg);
  for (int u = 0; u < cfg.user_count; ++u) {
    const auto& recs = by_user[u];
    auto& ds = data.clients[u];
    auto& summary = data.summaries[u];
    ds.user_id = u;
    summary.user_id = u;
    const auto rows = static_cast<Eigen::Index>(recs.size());

    double dmin = std::numeric_limits<double>::infinity(), dmax = -dmin;
    double rmin = dmin, rmax = -dmin;
    for (const auto* r : recs) {
      dmin = std::min(dmin, r->duration_secs);
      dmax = std::max(dmax, r->duration_secs);
      rmin = std::min(rmin, r->visit_rate);
      rmax = std::max(rmax, r->visit_rate);
    }
    auto scale = [](double x, double lo, double hi) {
      return hi > lo ? (x - lo) / (hi - lo) : 0.0;
    };

    ds.features = RowMatrix::Zero(rows, width);
    ds.labels.resize(recs.size());
    std::vector<double> stay_sum(cfg.area_count, 0.0);
    std::vector<int> stay_count(cfg.area_count, 0);
    for (Eigen::Index i = 0; i < rows; ++i) {
      const auto& r = *recs[i];
      ds.features(i, r.place_id) = 1.0;
      ds.features(i, cfg.place_count + r.area_id) = 1.0;
      ds.features(i, width - 3) = r.weekend ? 1.0 : 0.0;
      ds.features(i, width - 2) = scale(r.duration_secs, dmin, dmax);
      ds.features(i, width - 1) = scale(r.visit_rate, rmin, rmax);
      ds.labels[i] = r.next_place_id;
      stay_sum[r.area_id] += r.duration_secs;
      ++stay_count[r.area_id];
    }

    summary.movements = static_cast<double>(recs.size()) / cfg.trace_days;
    summary.area_mean_stay.resize(cfg.area_count);
    for (int a = 0; a < cfg.area_count; ++a) {
      summary.area_mean_stay[a] = stay_count[a] ? stay_sum[a] / stay_count[a] : 0.0;
    }

    // Stratified 80/20 split; singleton classes stay in train.
    Rng rng(derive_seed(cfg.seed, {kSplitStream, static_cast<std::uint64_t>(u)}));
    std::vector<std::vector<int>> by_label(cfg.place_count);
    for (int i = 0; i < static_cast<int>(ds.labels.size()); ++i) {
      by_label[ds.labels[i]].push_back(i);
    }
    for (auto& idx : by_label) {
      rng.shuffle(idx);
      const auto n_test =
          idx.size() < 2 ? 0 : static_cast<std::size_t>(std::lround(0.2 * idx.size()));
      ds.test.insert(ds.test.end(), idx.begin(), idx.begin() + n_test);
      ds.train.insert(ds.train.end(), idx.begin() + n_test, idx.end());
    }
    std::sort(ds.train.begin(), ds.train.end());
    std::sort(ds.test.begin(), ds.test.end());
  }
  return data;
}

double label_entropy(const std::vector<int>& labels, int classes) {
  std::vector<double> hist(classes, 0.0);
  for (int l : labels) hist[l] += 1.0;
  double h = 0.0;
  for (double c : hist) {
    if (c <= 0) continue;
    const double p = c / labels.size();
    h -= p * std::log2(p);
  }
  return h;
}

int modal_label(const std::vector<int>& labels, int classes) {
  std::vector<int> hist(classes, 0);
  for (int l : labels) ++hist[l];
  return static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
}

void write_traces_csv(const std::vector<VisitRecord>& traces,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "user_id,place_id,area_id,day,month,year,weekend,duration_secs,"
         "visit_rate,next_place_id\n";
  for (const auto& r : traces) {
    out << r.user_id << ',' << r.place_id << ',' << r.area_id << ',' << r.day
        << ',' << r.month << ',' << r.year << ',' << (r.weekend ? 1 : 0) << ','
        << format_double(r.duration_secs) << ',' << format_double(r.visit_rate)
        << ',' << r.next_place_id << '\n';
  }
}

json dataset_to_json(const ClientDataset& ds) {
  json features = json::array();
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < ds.features.cols(); ++k) row.push_back(ds.features(i, k));
    features.push_back(std::move(row));
  }
  return json{{"user_id", ds.user_id},
              {"features", std::move(features)},
              {"labels", ds.labels},
              {"train", ds.train},
              {"test", ds.test}};
}

json world_summary_json(const World& world, const Datasets& data) {
  json users = json::array();
  for (const auto& u : world.users) {
    users.push_back({{"user_id", u.user_id},
                     {"home_area", u.home_area},
                     {"favorites", u.favorites},
                     {"record_count", u.record_count},
                     {"movements", data.summaries[u.user_id].movements},
                     {"area_mean_stay", data.summaries[u.user_id].area_mean_stay}});
  }
  return json{{"config", world.config},
              {"place_area", world.place_area},
              {"users", std::move(users)}};
}

WorldConfig load_world_config(const std::filesystem::path& dir) {
  const auto j = read_json_file(dir / "world.json");
  auto cfg = j.at("config").get<WorldConfig>();
  validate(cfg);
  return cfg;
}

}  // namespace odfl
