#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "refexp/review.hpp"

namespace refexp {

struct HttpOptions {
  /// Root for image files; a sample's image is <image_dir>/<image_id><ext>
  /// with the first existing extension of .jpg, .jpeg, .png, .tif.
  std::filesystem::path image_dir;
  /// Optional static directory served at / (the reviewer UI).
  std::filesystem::path ui_dir;
};

/// JSON API over a ReviewService:
///   GET  /api/queue/next?reviewer=R   200 {sample, lease_id, image_url, expires_at_ms} | 204
///   POST /api/decisions                200 ack | 400 | 404 | 409
///   GET  /api/progress                 200 counters
///   GET  /api/samples/{id}/image       image bytes, box in X-BBox header
class ReviewHttpServer {
 public:
  ReviewHttpServer(ReviewService& service, HttpOptions options = {});
  ~ReviewHttpServer();
  ReviewHttpServer(const ReviewHttpServer&) = delete;
  ReviewHttpServer& operator=(const ReviewHttpServer&) = delete;

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Call after bind().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace refexp
