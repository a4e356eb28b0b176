#include "leafsev/service.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <limits>
#include <mutex>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "leafsev/errors.hpp"
#include "leafsev/fsio.hpp"
#include "leafsev/raster.hpp"
#include "leafsev/severity.hpp"
#include "leafsev/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace leafsev {

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, size) != 1 || EVP_DigestFinal_ex(ctx, digest, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 digest failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex(2 * len, '0');
  static const char kDigits[] = "0123456789abcdef";
  for (unsigned int i = 0; i < len; ++i) {
    hex[2 * i] = kDigits[digest[i] >> 4];
    hex[2 * i + 1] = kDigits[digest[i] & 0xf];
  }
  return hex;
}

std::string new_uuid4() {
  thread_local std::mt19937_64 rng = [] {
    std::random_device rd;
    std::seed_seq seq{rd(), rd(), rd(), rd(),
                      static_cast<unsigned>(
                          std::chrono::steady_clock::now().time_since_epoch().count())};
    return std::mt19937_64(seq);
  }();
  const std::uint64_t hi = rng();
  const std::uint64_t lo = rng();
  unsigned char b[16];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(hi >> (8 * i));
  for (int i = 0; i < 8; ++i) b[8 + i] = static_cast<unsigned char>(lo >> (8 * i));
  b[6] = static_cast<unsigned char>((b[6] & 0x0f) | 0x40);  // version 4
  b[8] = static_cast<unsigned char>((b[8] & 0x3f) | 0x80);  // RFC 4122 variant
  char out[37];
  std::snprintf(out, sizeof out,
                "%02x%02x%02x%02x-%02x%02x-%02x%02x-%02x%02x-%02x%02x%02x%02x%02x%02x", b[0], b[1],
                b[2], b[3], b[4], b[5], b[6], b[7], b[8], b[9], b[10], b[11], b[12], b[13], b[14],
                b[15]);
  return std::string(out);
}

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void reply_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
  reply_json(res, status, json{{"error", message}});
}

bool parse_int_param(const std::string& text, long long lo, long long hi, long long& out) {
  try {
    std::size_t used = 0;
    out = std::stoll(text, &used);
    return used == text.size() && out >= lo && out <= hi;
  } catch (const std::exception&) {
    return false;
  }
}

json config_to_json(const QuantConfig& cfg) {
  return json{{"mode", to_string(cfg.mode)},
              {"k", cfg.k},
              {"seed", cfg.seed},
              {"iterations", cfg.grabcut_iterations}};
}

}  // namespace

struct QuantifyService::Impl {
  ServiceConfig cfg;
  httplib::Server server;
  mutable std::mutex mu;
  std::set<std::string> jobs;

  explicit Impl(ServiceConfig c) : cfg(std::move(c)) {
    fs::create_directories(cfg.data_dir);
    reindex();

    const int workers = std::max(1, cfg.workers);
    server.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };
    server.set_payload_max_length(cfg.max_body_bytes);

    server.Get("/v1/healthz", [](const httplib::Request&, httplib::Response& res) {
      reply_json(res, 200, json{{"status", "ok"}, {"version", kVersion}});
    });

    server.Get(R"(/v1/jobs/([0-9a-fA-F-]+))",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const fs::path record = fs::path(cfg.data_dir) / id / "record.json";
                 std::error_code ec;
                 if (!fs::exists(record, ec)) {
                   reply_error(res, 404, "unknown job id");
                   return;
                 }
                 res.status = 200;
                 res.set_content(read_text_file(record.string()), "application/json");
               });

    server.Post("/v1/quantify", [this](const httplib::Request& req, httplib::Response& res) {
      handle_quantify(req, res);
    });
  }

  void reindex() {
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(cfg.data_dir, ec)) {
      if (entry.is_directory() && fs::exists(entry.path() / "record.json")) {
        jobs.insert(entry.path().filename().string());
      }
    }
  }

  void handle_quantify(const httplib::Request& req, httplib::Response& res) {
    QuantConfig qc;
    if (req.has_param("mode")) {
      try {
        qc.mode = color_mode_from_string(req.get_param_value("mode"));
      } catch (const std::exception& e) {
        reply_error(res, 400, e.what());
        return;
      }
    }
    long long v = 0;
    if (req.has_param("k")) {
      if (!parse_int_param(req.get_param_value("k"), 2, 8, v)) {
        reply_error(res, 400, "k must be an integer in [2, 8]");
        return;
      }
      qc.k = static_cast<int>(v);
    }
    if (req.has_param("seed")) {
      if (!parse_int_param(req.get_param_value("seed"), 0,
                           std::numeric_limits<long long>::max(), v)) {
        reply_error(res, 400, "seed must be a nonnegative integer");
        return;
      }
      qc.seed = static_cast<std::uint64_t>(v);
    }
    if (req.has_param("iters")) {
      if (!parse_int_param(req.get_param_value("iters"), 1, 100, v)) {
        reply_error(res, 400, "iters must be an integer in [1, 100]");
        return;
      }
      qc.grabcut_iterations = static_cast<int>(v);
    }

    const httplib::MultipartFormData* part = nullptr;
    if (req.has_file("image")) {
      part = &req.files.find("image")->second;
    } else if (req.files.size() == 1) {
      part = &req.files.begin()->second;
    }
    if (!part || part->content.empty()) {
      reply_error(res, 400, "multipart field 'image' with file content required");
      return;
    }

    const std::string id = new_uuid4();
    const fs::path dir = fs::path(cfg.data_dir) / id;
    fs::create_directories(dir);
    // Uploaded bytes are stored untouched so the hash always matches the wire.
    write_binary_file((dir / "original.png").string(), part->content.data(),
                      part->content.size());

    json record{{"id", id},
                {"received_at", utc_now()},
                {"image", id + "/original.png"},
                {"sha256", sha256_hex(part->content.data(), part->content.size())},
                {"config", config_to_json(qc)}};

    std::string response_body;
    int status = 200;
    try {
      const RasterImage img = decode_image(
          {reinterpret_cast<const std::uint8_t*>(part->content.data()), part->content.size()});
      const QuantifyOutput out =
          quantify_full(img, qc, part->filename.empty() ? id : part->filename);

      write_text_file((dir / "report.json").string(), report_to_json(out.report, true));
      const std::vector<std::uint8_t> png = encode_png(annotate(out));
      write_binary_file((dir / "annotated.png").string(), png.data(), png.size());

      record["status"] = "DONE";
      record["report"] = json::parse(report_to_json(out.report));
      response_body = report_to_json(out.report);
    } catch (const std::exception& e) {
      record["status"] = "FAILED";
      record["error"] = e.what();
      status = 422;
      response_body = json{{"error", e.what()}, {"job", id}}.dump();
    }

    write_text_file((dir / "record.json").string(), record.dump(2));
    {
      std::lock_guard<std::mutex> lock(mu);
      jobs.insert(id);
    }

    res.status = status;
    res.set_header("X-Job-Id", id);
    res.set_content(response_body, "application/json");
  }
};

QuantifyService::QuantifyService(ServiceConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}
QuantifyService::~QuantifyService() {
  if (impl_) impl_->server.stop();
}

bool QuantifyService::bind(const std::string& host, int port) {
  return impl_->server.bind_to_port(host, port);
}

int QuantifyService::bind_any_port(const std::string& host) {
  return impl_->server.bind_to_any_port(host);
}

bool QuantifyService::serve() { return impl_->server.listen_after_bind(); }

void QuantifyService::stop() { impl_->server.stop(); }

bool QuantifyService::wait_until_ready(double timeout_seconds) const {
  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(timeout_seconds));
  while (!impl_->server.is_running()) {
    if (std::chrono::steady_clock::now() >= deadline) return false;
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  return true;
}

std::size_t QuantifyService::job_count() const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  return impl_->jobs.size();
}

}  // namespace leafsev
