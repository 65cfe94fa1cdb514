#include "refexp/review_http.hpp"

#include <httplib.h>

#include "refexp/error.hpp"

namespace refexp {

namespace fs = std::filesystem;

struct ReviewHttpServer::Impl {
  ReviewService& service;
  HttpOptions options;
  httplib::Server server;

  Impl(ReviewService& s, HttpOptions o) : service(s), options(std::move(o)) { routes(); }

  static void send_json(httplib::Response& res, int status, const json::Json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json::Json{{"error", message}});
  }

  std::optional<fs::path> image_file(const std::string& image_id) const {
    if (options.image_dir.empty()) return std::nullopt;
    for (const char* ext : {".jpg", ".jpeg", ".png", ".tif", ".tiff", ".bmp"}) {
      fs::path p = options.image_dir / (image_id + ext);
      std::error_code ec;
      if (fs::is_regular_file(p, ec)) return p;
    }
    return std::nullopt;
  }

  static std::string content_type(const fs::path& p) {
    const std::string ext = p.extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".tif" || ext == ".tiff") return "image/tiff";
    if (ext == ".bmp") return "image/bmp";
    return "image/jpeg";
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    server.Get("/api/queue/next", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string reviewer = req.get_param_value("reviewer");
      if (reviewer.empty()) return send_error(res, 400, "reviewer parameter required");
      const auto lease = service.lease_next(reviewer);
      if (!lease) {
        res.status = 204;
        return;
      }
      json::Json body;
      body["sample"] = json::sample_to_json(lease->sample);
      body["lease_id"] = lease->lease_id;
      body["image_url"] = lease->image_ref;
      body["expires_at_ms"] = lease->expires_at_ms;
      send_json(res, 200, body);
    });

    server.Post("/api/decisions", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const auto body = json::Json::parse(req.body);
        ReviewDecision d;
        d.sample_id = body.at("sample_id").get<std::string>();
        const auto verdict = verdict_from_string(body.at("verdict").get<std::string>());
        if (!verdict) return send_error(res, 400, "unknown verdict");
        d.verdict = *verdict;
        if (const auto it = body.find("edited_text"); it != body.end() && !it->is_null()) {
          d.edited_text = it->get<std::string>();
        }
        d.reviewer = body.at("reviewer").get<std::string>();
        d.timestamp_ms = body.contains("timestamp") && body["timestamp"].is_number()
                             ? body["timestamp"].get<std::int64_t>()
                             : service.now();
        const std::string lease_id = body.value("lease_id", std::string());
        const Ack ack = service.submit_decision(d, lease_id);
        json::Json out;
        out["sample_id"] = ack.sample_id;
        out["status"] = std::string(to_string(ack.status));
        out["seq"] = ack.seq;
        out["duplicate"] = ack.duplicate;
        out["conflict"] = ack.conflict;
        out["template_conformant"] = ack.template_conformant;
        send_json(res, 200, out);
      } catch (const NotFound& e) {
        send_error(res, 404, e.what());
      } catch (const Conflict& e) {
        send_error(res, 409, e.what());
      } catch (const InvalidInput& e) {
        send_error(res, 400, e.what());
      } catch (const json::Json::exception& e) {
        send_error(res, 400, e.what());
      }
    });

    server.Get("/api/progress", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, progress_to_json(service.progress()));
    });

    server.Get(R"(/api/samples/([^/]+)/image)",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto sample = service.sample(req.matches[1].str());
                 if (!sample) return send_error(res, 404, "unknown sample");
                 const auto file = image_file(sample->image_id);
                 if (!file) return send_error(res, 404, "no image for '" + sample->image_id + "'");
                 std::string bytes;
                 try {
                   bytes = json::read_file(*file);
                 } catch (const IoError& e) {
                   return send_error(res, 500, e.what());
                 }
                 const auto& b = sample->bbox;
                 std::ostringstream box;
                 box << b.x_min() << "," << b.y_min() << "," << b.x_max() << "," << b.y_max();
                 res.set_header("X-BBox", box.str());
                 res.set_header("X-Image-Size", std::to_string(sample->image_width) + "," +
                                                    std::to_string(sample->image_height));
                 res.set_content(std::move(bytes), content_type(*file));
               });

    if (!options.ui_dir.empty()) server.set_mount_point("/", options.ui_dir.string());
  }
};

ReviewHttpServer::ReviewHttpServer(ReviewService& service, HttpOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

ReviewHttpServer::~ReviewHttpServer() { stop(); }

int ReviewHttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = impl_->server.bind_to_any_port(host);
    if (bound < 0) throw IoError("cannot bind " + host);
    return bound;
  }
  if (!impl_->server.bind_to_port(host, port)) {
    throw IoError("cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void ReviewHttpServer::listen() { impl_->server.listen_after_bind(); }

void ReviewHttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool ReviewHttpServer::running() const { return impl_->server.is_running(); }

}  // namespace refexp
