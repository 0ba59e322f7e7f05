#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "arpps/arpps.h"

namespace {

using nlohmann::ordered_json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

struct Failure {
  int code;
  std::string message;
};

int exit_code(arpps_status s) {
  switch (s) {
    case ARPPS_OK:
      return 0;
    case ARPPS_ERR_INVALID_ARGUMENT:
      return kExitUsage;
    case ARPPS_ERR_DATA:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

void check(arpps_status s) {
  if (s != ARPPS_OK) throw Failure{exit_code(s), arpps_last_error()};
}

// Owns a string handed out by the library.
struct LibString {
  char* p = nullptr;
  ~LibString() { arpps_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct StoreHandle {
  arpps_store* p = nullptr;
  ~StoreHandle() { arpps_store_free(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitRuntime, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !out.write(text.data(), static_cast<std::streamsize>(text.size()))) {
    throw Failure{kExitRuntime, "cannot write " + path};
  }
}

// Sections read by the CLI itself; command sections are checked by the library.
void check_config_shape(const ordered_json& j, const std::string& path) {
  using Kind = ordered_json::value_t;
  struct Key {
    const char* section;
    const char* name;
    bool (*ok)(const ordered_json&);
  };
  static const Key kLocal[] = {
      {"data", "dir", [](const ordered_json& v) { return v.is_string(); }},
      {"data", "points", [](const ordered_json& v) { return v.is_string(); }},
      {"data", "lines", [](const ordered_json& v) { return v.is_string(); }},
      {"data", "snapshot", [](const ordered_json& v) { return v.is_string(); }},
      {"service", "address", [](const ordered_json& v) { return v.is_string(); }},
      {"service", "port", [](const ordered_json& v) { return v.is_number_integer(); }},
      {"query", "radius", [](const ordered_json& v) { return v.is_number(); }},
  };
  for (const auto& [name, value] : j.items()) {
    const bool local = name == "data" || name == "service" || name == "query";
    const bool library = name == "gen" || name == "match_bench" || name == "track_sim" || name == "render";
    if (!local && !library) throw Failure{kExitUsage, path + ": unknown section '" + name + "'"};
    if (value.type() != Kind::object) throw Failure{kExitUsage, path + ": section '" + name + "' must be an object"};
    if (!local) continue;
    for (const auto& [key, v] : value.items()) {
      const Key* match = nullptr;
      for (const auto& k : kLocal) {
        if (name == k.section && key == k.name) match = &k;
      }
      if (!match) throw Failure{kExitUsage, path + ": unknown key '" + name + "." + key + "'"};
      if (!match->ok(v)) throw Failure{kExitUsage, path + ": wrong type for '" + name + "." + key + "'"};
    }
  }
}

ordered_json load_config(const std::string& path) {
  if (path.empty()) return ordered_json::object();
  try {
    auto j = ordered_json::parse(read_file(path));
    if (!j.is_object()) throw Failure{kExitUsage, path + ": config must be a JSON object"};
    check_config_shape(j, path);
    return j;
  } catch (const ordered_json::parse_error& e) {
    throw Failure{kExitUsage, path + ": " + e.what()};
  }
}

ordered_json section(const ordered_json& config, const char* name) {
  if (!config.contains(name)) return ordered_json::object();
  return config.at(name);
}

void summary(const std::string& text) { std::cerr << text << '\n'; }

// Data source shared by validate, serve, query and render-frame.
struct DataOptions {
  std::string dir;
  std::string points;
  std::string lines;
  std::string snapshot;

  void add(CLI::App* app) {
    app->add_option("--data", dir, "Directory holding pipe_points.csv and pipe_lines.csv");
    app->add_option("--points-csv", points, "Pipe point CSV");
    app->add_option("--lines-csv", lines, "Pipe line CSV");
    app->add_option("--snapshot", snapshot, "Store snapshot file");
  }

  // Flags win over the config file's "data" section.
  void resolve(const ordered_json& config) {
    const auto d = section(config, "data");
    auto pick = [&](std::string& field, const char* key) {
      if (field.empty() && d.contains(key)) field = d.at(key).get<std::string>();
    };
    pick(dir, "dir");
    pick(points, "points");
    pick(lines, "lines");
    pick(snapshot, "snapshot");
    if (!dir.empty()) {
      if (points.empty()) points = (std::filesystem::path(dir) / "pipe_points.csv").string();
      if (lines.empty()) lines = (std::filesystem::path(dir) / "pipe_lines.csv").string();
    }
    if (snapshot.empty() && (points.empty() || lines.empty())) {
      throw Failure{kExitUsage, "no data: give --data, --points-csv and --lines-csv, or --snapshot"};
    }
  }

  ordered_json to_json() const {
    return {{"points", points}, {"lines", lines}, {"snapshot", snapshot}};
  }

  void open(StoreHandle& h) const {
    if (!snapshot.empty()) {
      check(arpps_store_open_snapshot(snapshot.c_str(), &h.p));
    } else {
      const std::string p = read_file(points);
      const std::string l = read_file(lines);
      check(arpps_store_open_csv(p.c_str(), l.c_str(), 1, &h.p));
    }
  }
};

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

void log_line(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pipeline prospecting toolkit: data, service, matching, tracking, overlay"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override it")->check(CLI::ExistingFile);

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic pipe network as CSV");
  std::optional<std::uint64_t> gen_seed;
  std::optional<std::int64_t> gen_points;
  std::optional<double> gen_extent;
  std::optional<std::vector<double>> gen_center;
  std::string gen_out = ".";
  gen->add_option("--seed", gen_seed);
  gen->add_option("--points", gen_points, "Number of manholes");
  gen->add_option("--extent", gen_extent, "Side of the covered square, meters");
  gen->add_option("--center", gen_center, "lon,lat")->delimiter(',')->expected(2);
  gen->add_option("--out", gen_out, "Output directory for pipe_points.csv and pipe_lines.csv");

  // validate
  auto* validate = app.add_subcommand("validate", "Check a network for consistency");
  DataOptions validate_data;
  validate_data.add(validate);

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP geo service until interrupted");
  DataOptions serve_data;
  serve_data.add(serve);
  std::optional<std::string> serve_address;
  std::optional<int> serve_port;
  serve->add_option("--address", serve_address, "Bind address (default 127.0.0.1)");
  serve->add_option("--port", serve_port, "Port, 0 for any free port (default 8080)")->envname("ARPPS_PORT");

  // query
  auto* query = app.add_subcommand("query", "Offline range query, prints the HTTP body");
  DataOptions query_data;
  query_data.add(query);
  std::string query_range;
  std::optional<std::vector<double>> query_fix;
  std::optional<double> query_radius;
  auto* range_opt = query->add_option("--range", query_range, "lon_min,lat_min,lon_max,lat_max");
  auto* fix_opt = query->add_option("--fix", query_fix, "lon,lat")->delimiter(',')->expected(2);
  query->add_option("--radius", query_radius, "Load radius around --fix, meters (default 10)");
  range_opt->excludes(fix_opt);

  // match-bench
  auto* bench = app.add_subcommand("match-bench", "TCNN matching against the exact oracle");
  std::optional<std::uint64_t> bench_seed;
  std::optional<int> bench_instances, bench_m, bench_n, bench_dim, bench_max_steps;
  std::optional<double> bench_noise, bench_margin;
  std::optional<std::string> bench_oracle, bench_activation;
  std::string bench_out;
  bench->add_option("--seed", bench_seed);
  bench->add_option("--instances", bench_instances);
  bench->add_option("--m", bench_m, "Reference descriptors");
  bench->add_option("--n", bench_n, "Scene descriptors");
  bench->add_option("--dim", bench_dim, "Descriptor dimension");
  bench->add_option("--noise", bench_noise);
  bench->add_option("--min-margin", bench_margin);
  bench->add_option("--max-steps", bench_max_steps);
  bench->add_option("--oracle", bench_oracle)->check(CLI::IsMember({"auto", "exhaustive", "one_to_one"}));
  bench->add_option("--activation", bench_activation)->check(CLI::IsMember({"canonical", "as_printed"}));
  bench->add_option("--out", bench_out, "Write the report here instead of stdout");

  // track-sim
  auto* sim = app.add_subcommand("track-sim", "Simulate sensors, track, report errors");
  DataOptions sim_data;
  sim_data.add(sim);
  std::optional<std::uint64_t> sim_seed;
  std::optional<std::string> sim_profile;
  std::optional<double> sim_duration, sim_rate, sim_ng, sim_na, sim_nc, sim_np, sim_radius;
  std::optional<int> sim_every;
  bool sim_no_filter = false;
  std::string sim_frames, sim_out;
  sim->add_option("--seed", sim_seed);
  sim->add_option("--profile", sim_profile)
      ->check(CLI::IsMember({"stationary", "constant-rotation", "walk-path"}));
  sim->add_option("--duration", sim_duration, "Seconds");
  sim->add_option("--rate", sim_rate, "Hz");
  sim->add_option("--noise-gyro", sim_ng, "rad/s");
  sim->add_option("--noise-accel", sim_na, "m/s^2");
  sim->add_option("--noise-compass", sim_nc, "degrees");
  sim->add_option("--noise-gps", sim_np, "meters");
  sim->add_option("--radius", sim_radius, "Load radius, meters");
  sim->add_flag("--no-filter", sim_no_filter, "Disable the recursive filters");
  sim->add_option("--frames", sim_frames, "Write overlay frames (JSON lines); needs data");
  sim->add_option("--frame-every", sim_every);
  sim->add_option("--out", sim_out, "Write the report here instead of stdout");

  // render-frame
  auto* render = app.add_subcommand("render-frame", "Render one overlay frame");
  DataOptions render_data;
  render_data.add(render);
  std::optional<double> r_lon, r_lat, r_alt, r_heading, r_pitch, r_roll, r_size, r_depth, r_radius;
  std::optional<std::string> r_mode;
  std::string r_out, r_svg;
  render->add_option("--lon", r_lon);
  render->add_option("--lat", r_lat);
  render->add_option("--alt", r_alt, "Camera altitude, meters");
  render->add_option("--heading", r_heading, "Degrees clockwise from north");
  render->add_option("--pitch", r_pitch, "Degrees, positive looks down");
  render->add_option("--roll", r_roll, "Degrees");
  render->add_option("--trench-mode", r_mode)
      ->check(CLI::IsMember({"rectangular_all_sight", "circular_front_sight_180"}));
  render->add_option("--trench-size", r_size, "Square side or sector radius, meters");
  render->add_option("--trench-depth", r_depth, "Meters");
  render->add_option("--radius", r_radius, "Load radius, meters");
  render->add_option("--out", r_out, "Frame JSON path (default stdout)");
  render->add_option("--svg", r_svg, "Also write an SVG preview");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  auto set = [](ordered_json& j, const char* key, const auto& opt) {
    if (opt) j[key] = *opt;
  };

  try {
    const ordered_json config = load_config(config_path);

    if (*gen) {
      ordered_json c = section(config, "gen");
      set(c, "seed", gen_seed);
      set(c, "points", gen_points);
      set(c, "extent", gen_extent);
      if (gen_center) {
        c["center_lon"] = (*gen_center)[0];
        c["center_lat"] = (*gen_center)[1];
      }
      if (c.contains("points") && c["points"].is_number_integer() && c["points"].get<std::int64_t>() <= 0) {
        throw Failure{kExitUsage, "--points must be positive"};
      }
      LibString report, points, lines;
      check(arpps_generate(c.dump().c_str(), &report.p, &points.p, &lines.p));
      std::filesystem::create_directories(gen_out);
      write_file((std::filesystem::path(gen_out) / "pipe_points.csv").string(), points.str());
      write_file((std::filesystem::path(gen_out) / "pipe_lines.csv").string(), lines.str());
      std::cout << report.str() << '\n';
      const auto r = ordered_json::parse(report.str());
      summary("gen: " + r["points"].dump() + " points, " + r["lines"].dump() + " lines -> " + gen_out);
      return 0;
    }

    if (*validate) {
      validate_data.resolve(config);
      if (validate_data.points.empty()) throw Failure{kExitUsage, "validate needs CSV input"};
      const std::string p = read_file(validate_data.points);
      const std::string l = read_file(validate_data.lines);
      LibString report;
      check(arpps_validate(p.c_str(), l.c_str(), &report.p));
      std::cout << report.str() << '\n';
      const auto r = ordered_json::parse(report.str());
      const bool ok = r["valid"].get<bool>();
      summary(std::string("validate: ") + (ok ? "ok" : "FAILED") + ", " + r["points"].dump() + " points, " +
              r["lines"].dump() + " lines, " + std::to_string(r["violations"].size()) + " violations");
      return ok ? 0 : kExitData;
    }

    if (*serve) {
      serve_data.resolve(config);
      const auto sc = section(config, "service");
      std::string address = serve_address.value_or(sc.value("address", std::string("127.0.0.1")));
      int port = serve_port.value_or(sc.value("port", 8080));
      StoreHandle store;
      serve_data.open(store);
      std::size_t np = 0, nl = 0;
      check(arpps_store_counts(store.p, &np, &nl));
      ordered_json resolved = {{"data", serve_data.to_json()}, {"address", address}, {"port", port}};
      summary("serve: config " + resolved.dump());

      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      arpps_service* svc = nullptr;
      check(arpps_service_start(store.p, address.c_str(), port, log_line, nullptr, &svc));
      std::fprintf(stderr, "serve: %zu points, %zu lines on http://%s:%d\n", np, nl, address.c_str(),
                   arpps_service_port(svc));
      std::fflush(stderr);
      while (!g_stop.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
      arpps_service_stop(svc);
      summary("serve: stopped");
      return 0;
    }

    if (*query) {
      query_data.resolve(config);
      StoreHandle store;
      query_data.open(store);
      std::string range = query_range;
      if (query_fix) {
        const double radius = query_radius.value_or(section(config, "query").value("radius", 10.0));
        double b[4];
        check(arpps_bbox_from_fix((*query_fix)[0], (*query_fix)[1], radius, b));
        std::ostringstream ss;
        ss.precision(17);
        ss << b[0] << ',' << b[1] << ',' << b[2] << ',' << b[3];
        range = ss.str();
      }
      if (range.empty()) throw Failure{kExitUsage, "query needs --range or --fix"};
      summary("query: config " + ordered_json({{"data", query_data.to_json()}, {"range", range}}).dump());
      int status = 0;
      LibString body;
      check(arpps_store_query_range(store.p, range.c_str(), &status, &body.p));
      if (status != 200) throw Failure{kExitUsage, body.str()};
      std::cout << body.str();
      std::cout.flush();
      return 0;
    }

    if (*bench) {
      ordered_json c = section(config, "match_bench");
      set(c, "seed", bench_seed);
      set(c, "instances", bench_instances);
      set(c, "m", bench_m);
      set(c, "n", bench_n);
      set(c, "dim", bench_dim);
      set(c, "noise", bench_noise);
      set(c, "min_margin", bench_margin);
      set(c, "oracle", bench_oracle);
      if (bench_max_steps || bench_activation) {
        if (!c.contains("tcnn")) c["tcnn"] = ordered_json::object();
        set(c["tcnn"], "max_steps", bench_max_steps);
        set(c["tcnn"], "activation", bench_activation);
      }
      LibString report;
      check(arpps_match_bench(c.dump().c_str(), &report.p));
      if (bench_out.empty()) std::cout << report.str() << '\n';
      else write_file(bench_out, report.str() + "\n");
      const auto r = ordered_json::parse(report.str());
      const auto& s = r["summary"];
      summary("match-bench: " + s["instances"].dump() + " instances, converged " + s["converged"].dump() +
              ", oracle agreement " + s["agree"].dump() + ", one-to-one " + s["converged_one_to_one"].dump() +
              ", nearest-neighbour agreement " + s["nn_agree"].dump() + ", mean steps " +
              s["mean_steps"].dump() + " (oracle " + r["oracle_mode"].get<std::string>() + ")");
      return 0;
    }

    if (*sim) {
      ordered_json c = section(config, "track_sim");
      auto& tr = c["trajectory"];
      if (tr.is_null()) tr = ordered_json::object();
      set(tr, "seed", sim_seed);
      set(tr, "profile", sim_profile);
      set(tr, "duration", sim_duration);
      set(tr, "rate", sim_rate);
      if (sim_ng || sim_na || sim_nc || sim_np) {
        if (!tr.contains("noise")) tr["noise"] = ordered_json::object();
        set(tr["noise"], "gyro", sim_ng);
        set(tr["noise"], "accel", sim_na);
        set(tr["noise"], "compass", sim_nc);
        set(tr["noise"], "gps", sim_np);
      }
      if (sim_no_filter || sim_radius) {
        if (!c.contains("tracker")) c["tracker"] = ordered_json::object();
        if (sim_no_filter) c["tracker"]["filtering"] = false;
        set(c["tracker"], "load_radius", sim_radius);
      }
      set(c, "frame_every", sim_every);
      StoreHandle store;
      if (!sim_frames.empty()) sim_data.resolve(config), sim_data.open(store);
      LibString report, frames;
      check(arpps_track_sim(c.dump().c_str(), store.p, &report.p, sim_frames.empty() ? nullptr : &frames.p));
      if (!sim_frames.empty()) write_file(sim_frames, frames.str());
      if (sim_out.empty()) std::cout << report.str() << '\n';
      else write_file(sim_out, report.str() + "\n");
      const auto r = ordered_json::parse(report.str());
      char line[256];
      std::snprintf(line, sizeof(line),
                    "track-sim: yaw error max %.6f deg, jitter filtered %.6f deg vs unfiltered %.6f deg, "
                    "position rms %.3f m",
                    r["tracked"]["yaw_error_max_deg"].get<double>(), r["tracked"]["jitter_rms_deg"].get<double>(),
                    r["unfiltered"]["jitter_rms_deg"].get<double>(), r["tracked"]["position_rms_m"].get<double>());
      summary(line);
      return 0;
    }

    if (*render) {
      render_data.resolve(config);
      ordered_json c = section(config, "render");
      if (r_lon || r_lat || r_alt || r_heading || r_pitch || r_roll) {
        if (!c.contains("pose")) c["pose"] = ordered_json::object();
        set(c["pose"], "lon", r_lon);
        set(c["pose"], "lat", r_lat);
        set(c["pose"], "alt", r_alt);
        set(c["pose"], "heading", r_heading);
        set(c["pose"], "pitch", r_pitch);
        set(c["pose"], "roll", r_roll);
      }
      if (r_mode || r_size || r_depth) {
        if (!c.contains("trench")) c["trench"] = ordered_json::object();
        set(c["trench"], "mode", r_mode);
        set(c["trench"], "size", r_size);
        set(c["trench"], "depth", r_depth);
      }
      set(c, "load_radius", r_radius);
      StoreHandle store;
      render_data.open(store);
      summary("render-frame: config " + ordered_json({{"data", render_data.to_json()}, {"render", c}}).dump());
      LibString frame, svg;
      check(arpps_render_frame(store.p, c.dump().c_str(), &frame.p, r_svg.empty() ? nullptr : &svg.p));
      if (r_out.empty()) std::cout << frame.str() << '\n';
      else write_file(r_out, frame.str() + "\n");
      if (!r_svg.empty()) write_file(r_svg, svg.str());
      const auto f = nlohmann::json::parse(frame.str());
      summary("render-frame: " + std::to_string(f["primitives"].size()) + " primitives");
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << '\n';
    return f.code;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
