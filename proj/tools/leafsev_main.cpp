// leafsev: leaf disease severity quantification, detection evaluation,
// treatment statistics, synthetic fixtures, and an HTTP serving mode.
//
// Reports go to stdout as JSON; diagnostics go to stderr.
// Exit codes: 0 success, 1 partial or data failure, 2 usage error.

#include <atomic>
#include <cstdlib>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "leafsev/deteval.hpp"
#include "leafsev/errors.hpp"
#include "leafsev/fsio.hpp"
#include "leafsev/raster.hpp"
#include "leafsev/service.hpp"
#include "leafsev/severity.hpp"
#include "leafsev/stats.hpp"
#include "leafsev/synth.hpp"
#include "leafsev/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int worker_count(std::size_t task_count) {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("LEAFSEV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 256) n = static_cast<unsigned>(v);
  }
  if (task_count < n) n = static_cast<unsigned>(task_count);
  return static_cast<int>(std::max(1u, n));
}

std::string dump(const json& j, bool pretty) { return pretty ? j.dump(2) : j.dump(); }

// ---- quantify ----------------------------------------------------------

struct QuantifyArgs {
  std::vector<std::string> images;
  std::string mode = "value";
  int k = 5;
  int iters = 5;
  std::uint64_t seed = 0;
  std::string rect;
  std::string out_dir;
  bool annotate_out = false;
  bool pretty = false;
};

bool parse_rect(const std::string& text, leafsev::Rect& rect) {
  int x = 0, y = 0, w = 0, h = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d,%d,%d,%d%c", &x, &y, &w, &h, &tail) != 4) return false;
  rect = leafsev::Rect{x, y, w, h};
  return true;
}

int run_quantify(const QuantifyArgs& args) {
  leafsev::QuantConfig cfg;
  cfg.mode = leafsev::color_mode_from_string(args.mode);
  cfg.k = args.k;
  cfg.grabcut_iterations = args.iters;
  cfg.seed = args.seed;
  if (!args.rect.empty()) {
    leafsev::Rect r;
    if (!parse_rect(args.rect, r)) {
      std::cerr << "leafsev: --rect expects x,y,w,h\n";
      return 2;
    }
    cfg.rect = r;
  }
  if (!args.out_dir.empty()) fs::create_directories(args.out_dir);

  struct Slot {
    bool ok = false;
    json record;
  };
  std::vector<Slot> slots(args.images.size());
  std::atomic<std::size_t> next{0};

  const auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= args.images.size()) return;
      const std::string& path = args.images[i];
      try {
        const auto bytes = leafsev::read_binary_file(path);
        const leafsev::RasterImage img = leafsev::decode_image({bytes.data(), bytes.size()});
        const leafsev::QuantifyOutput out = leafsev::quantify_full(img, cfg, path);
        slots[i].ok = true;
        slots[i].record = json::parse(leafsev::report_to_json(out.report));
        if (!args.out_dir.empty()) {
          const std::string stem = fs::path(path).stem().string();
          leafsev::write_text_file((fs::path(args.out_dir) / (stem + ".report.json")).string(),
                                   leafsev::report_to_json(out.report, true));
          if (args.annotate_out) {
            const auto png = leafsev::encode_png(leafsev::annotate(out));
            leafsev::write_binary_file(
                (fs::path(args.out_dir) / (stem + ".annotated.png")).string(), png.data(),
                png.size());
          }
        }
      } catch (const std::exception& e) {
        slots[i].record = json{{"image", path}, {"error", e.what()}};
        const std::string msg = "leafsev: " + path + ": " + e.what() + "\n";
        std::cerr << msg;
      }
    }
  };

  const int workers = worker_count(args.images.size());
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  bool any_failed = false;
  json out = json::array();
  for (const auto& slot : slots) {
    if (!slot.ok) any_failed = true;
    out.push_back(slot.record);
  }
  if (args.images.size() == 1) {
    std::cout << dump(out[0], args.pretty) << "\n";
  } else {
    std::cout << dump(out, args.pretty) << "\n";
  }
  return any_failed ? 1 : 0;
}

// ---- eval ---------------------------------------------------------------

int run_eval(const std::string& gt_dir, const std::string& det_path, double iou_thr,
             const std::string& interp_name, bool pretty) {
  std::vector<std::string> xml_files;
  for (const auto& entry : fs::directory_iterator(gt_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".xml") {
      xml_files.push_back(entry.path().string());
    }
  }
  std::sort(xml_files.begin(), xml_files.end());

  std::vector<leafsev::GroundTruthBox> gts;
  for (const auto& path : xml_files) {
    try {
      const leafsev::ParsedAnnotation ann = leafsev::parse_voc_xml(leafsev::read_text_file(path));
      gts.insert(gts.end(), ann.boxes.begin(), ann.boxes.end());
    } catch (const std::exception& e) {
      std::cerr << "leafsev: " << path << ": " << e.what() << "\n";
      return 1;
    }
  }

  std::vector<leafsev::Detection> dets;
  try {
    dets = leafsev::parse_detections_jsonl(leafsev::read_text_file(det_path));
  } catch (const std::exception& e) {
    std::cerr << "leafsev: " << det_path << ": " << e.what() << "\n";
    return 1;
  }

  const auto interp = interp_name == "11pt" ? leafsev::Interpolation::kElevenPoint
                                            : leafsev::Interpolation::kAllPoint;
  const leafsev::EvalReport report = leafsev::evaluate(gts, dets, iou_thr, interp);
  for (const auto& warning : report.warnings) std::cerr << "leafsev: " << warning << "\n";
  std::cout << leafsev::eval_report_to_json(report, pretty) << "\n";
  return 0;
}

// ---- stats --------------------------------------------------------------

int run_stats(const std::string& csv_path, double alpha, bool pretty) {
  leafsev::TreatmentTable table;
  try {
    table = leafsev::parse_treatment_csv(leafsev::read_text_file(csv_path));
  } catch (const std::exception& e) {
    std::cerr << "leafsev: " << csv_path << ": " << e.what() << "\n";
    return 1;
  }
  if (table.names.size() < 2) {
    std::cerr << "leafsev: need at least two treatment columns\n";
    return 1;
  }

  json out;
  try {
    const leafsev::AnovaTable a = leafsev::one_way_anova(table.groups);
    out["anova"] = {{"df_between", a.df_between}, {"df_within", a.df_within},
                    {"ss_between", a.ss_between}, {"ss_within", a.ss_within},
                    {"ms_between", a.ms_between}, {"ms_within", a.ms_within},
                    {"f", a.f},                   {"p", a.p}};

    out["tukey"] = json::array();
    for (const auto& pair : leafsev::tukey_hsd(table.groups, alpha, &table.names)) {
      out["tukey"].push_back({{"a", pair.label_a},
                              {"b", pair.label_b},
                              {"q", pair.statistic},
                              {"p", pair.p},
                              {"significant", pair.significant}});
    }

    out["confidence_intervals"] = json::array();
    for (std::size_t i = 0; i < table.groups.size(); ++i) {
      const leafsev::Interval ci = leafsev::mean_ci(table.groups[i], 1.0 - alpha);
      out["confidence_intervals"].push_back({{"treatment", table.names[i]},
                                             {"lower", ci.lower},
                                             {"upper", ci.upper},
                                             {"confidence", ci.confidence}});
    }

    out["ks"] = json::array();
    for (std::size_t i = 0; i < table.groups.size(); ++i) {
      json entry{{"treatment", table.names[i]}};
      try {
        const leafsev::TestResult r = leafsev::ks_normality(table.groups[i]);
        entry["d"] = r.statistic;
        entry["p"] = r.p;
        entry["note"] = r.note;
      } catch (const std::exception& e) {
        entry["error"] = e.what();
      }
      out["ks"].push_back(entry);
    }
  } catch (const std::exception& e) {
    std::cerr << "leafsev: " << e.what() << "\n";
    return 1;
  }
  out["alpha"] = alpha;

  std::cout << dump(out, pretty) << "\n";
  return 0;
}

// ---- synth --------------------------------------------------------------

int run_synth(const std::string& spec_path, double target_ds, std::uint64_t seed,
              const std::string& out_path, const std::string& truth_path) {
  try {
    leafsev::SynthSpec spec;
    if (!spec_path.empty()) {
      spec = leafsev::parse_synth_spec(leafsev::read_text_file(spec_path));
    } else {
      spec = leafsev::make_target_spec(target_ds, seed);
    }
    const leafsev::SynthResult result = leafsev::render_leaf(spec);
    const auto png = leafsev::encode_png(result.image);
    leafsev::write_binary_file(out_path, png.data(), png.size());
    if (!truth_path.empty()) {
      leafsev::write_text_file(truth_path, leafsev::truth_to_json(result.truth));
    }
    std::cout << leafsev::truth_to_json(result.truth) << "\n";
  } catch (const std::exception& e) {
    std::cerr << "leafsev: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

// ---- serve --------------------------------------------------------------

std::atomic<leafsev::QuantifyService*> g_service{nullptr};

void handle_signal(int) {
  if (auto* svc = g_service.load()) svc->stop();
}

int run_serve(const std::string& host, int port, const std::string& data_dir,
              std::size_t max_body, int workers) {
  leafsev::ServiceConfig cfg;
  cfg.data_dir = data_dir;
  cfg.max_body_bytes = max_body;
  cfg.workers = workers;
  if (const char* env = std::getenv("LEAFSEV_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end && *end == '\0' && v >= 1 && v <= 256) cfg.workers = static_cast<int>(v);
  }

  leafsev::QuantifyService svc(cfg);
  if (!svc.bind(host, port)) {
    std::cerr << "leafsev: cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  g_service.store(&svc);
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cerr << "leafsev: serving on " << host << ":" << port << ", data in " << data_dir << "\n";
  svc.serve();
  g_service.store(nullptr);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"leaf disease severity toolkit"};
  app.set_version_flag("--version", std::string(leafsev::kVersion));
  app.require_subcommand(1);

  QuantifyArgs qa;
  CLI::App* quantify = app.add_subcommand("quantify", "Quantify disease severity on leaf images");
  quantify->add_option("images", qa.images, "input images (PNG, JPEG, or PPM)")->required();
  quantify->add_option("--mode", qa.mode, "feature space: value or rgb")
      ->check(CLI::IsMember({"value", "rgb"}))
      ->capture_default_str();
  quantify->add_option("--k", qa.k, "cluster count")->check(CLI::Range(2, 8))->capture_default_str();
  quantify->add_option("--iters", qa.iters, "segmentation refinement iterations")
      ->check(CLI::Range(1, 100))
      ->capture_default_str();
  quantify->add_option("--seed", qa.seed, "clustering seed")->capture_default_str();
  quantify->add_option("--rect", qa.rect, "initial leaf rectangle as x,y,w,h (source pixels)");
  quantify->add_option("--out", qa.out_dir, "directory for per-image report files");
  quantify->add_flag("--annotate", qa.annotate_out, "also write annotated PNGs (needs --out)")
      ->needs(quantify->get_option("--out"));
  quantify->add_flag("--pretty", qa.pretty, "indent JSON output");

  std::string gt_dir, det_path, interp_name = "all";
  double iou_thr = 0.5;
  bool eval_pretty = false;
  CLI::App* eval = app.add_subcommand("eval", "Score detections against box annotations");
  eval->add_option("--gt", gt_dir, "directory of annotation XML files")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--det", det_path, "detections file, one JSON object per line")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--iou", iou_thr, "match threshold")
      ->check(CLI::Range(1e-9, 1.0))
      ->capture_default_str();
  eval->add_option("--interp", interp_name, "precision interpolation: all or 11pt")
      ->check(CLI::IsMember({"all", "11pt"}))
      ->capture_default_str();
  eval->add_flag("--pretty", eval_pretty, "indent JSON output");

  std::string csv_path;
  double alpha = 0.05;
  bool stats_pretty = false;
  CLI::App* stats = app.add_subcommand("stats", "Compare treatment severity samples");
  stats->add_option("--csv", csv_path, "CSV with one column per treatment")
      ->required()
      ->check(CLI::ExistingFile);
  stats->add_option("--alpha", alpha, "significance level")
      ->check(CLI::Range(1e-9, 0.999999))
      ->capture_default_str();
  stats->add_flag("--pretty", stats_pretty, "indent JSON output");

  std::string spec_path, synth_out, truth_path;
  double target_ds = 10.0;
  std::uint64_t synth_seed = 0;
  CLI::App* synth = app.add_subcommand("synth", "Render a synthetic leaf with known severity");
  CLI::Option* spec_opt =
      synth->add_option("--spec", spec_path, "scene description JSON")->check(CLI::ExistingFile);
  synth->add_option("--target-ds", target_ds, "build a scene near this severity percent")
      ->check(CLI::Range(0.0, 60.0))
      ->excludes(spec_opt);
  synth->add_option("--seed", synth_seed, "noise and placement seed");
  synth->add_option("--out", synth_out, "output PNG path")->required();
  synth->add_option("--truth", truth_path, "also write ground-truth JSON here");

  std::string host = "127.0.0.1", data_dir = "data";
  int port = 8080, workers = 4;
  std::size_t max_body = 20 * 1024 * 1024;
  CLI::App* serve = app.add_subcommand("serve", "Run the HTTP quantification service");
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port)->check(CLI::Range(1, 65535))->capture_default_str();
  serve->add_option("--data-dir", data_dir, "job storage root")->capture_default_str();
  serve->add_option("--max-body", max_body, "upload size limit in bytes")->capture_default_str();
  serve->add_option("--workers", workers)->check(CLI::Range(1, 256))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*quantify) return run_quantify(qa);
    if (*eval) return run_eval(gt_dir, det_path, iou_thr, interp_name, eval_pretty);
    if (*stats) return run_stats(csv_path, alpha, stats_pretty);
    if (*synth) return run_synth(spec_path, target_ds, synth_seed, synth_out, truth_path);
    if (*serve) return run_serve(host, port, data_dir, max_body, workers);
  } catch (const std::exception& e) {
    std::cerr << "leafsev: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
