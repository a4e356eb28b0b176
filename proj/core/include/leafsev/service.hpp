#pragma once

#include <cstddef>
#include <memory>
#include <string>

namespace leafsev {

struct ServiceConfig {
  std::string data_dir = "data";
  std::size_t max_body_bytes = 20 * 1024 * 1024;
  int workers = 4;
};

// HTTP front end: POST /v1/quantify (multipart image; query mode/k/seed/iters),
// GET /v1/jobs/{id}, GET /v1/healthz. Every job persists under
// data_dir/{job-id}/ (uploaded image, record.json, report.json) and is
// re-indexed on construction, so completed jobs survive a restart.
class QuantifyService {
 public:
  explicit QuantifyService(ServiceConfig cfg);
  ~QuantifyService();
  QuantifyService(const QuantifyService&) = delete;
  QuantifyService& operator=(const QuantifyService&) = delete;

  // Bind + serve. serve() blocks until stop() is called from another thread.
  bool bind(const std::string& host, int port);
  int bind_any_port(const std::string& host);  // returns the bound port, -1 on failure
  bool serve();
  void stop();
  bool wait_until_ready(double timeout_seconds) const;

  std::size_t job_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string sha256_hex(const void* data, std::size_t size);
std::string new_uuid4();

}  // namespace leafsev
