#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "refexp/review_http.hpp"
#include "refexp/serialization.hpp"
#include "synthetic.hpp"

using namespace refexp;

namespace {

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    samples_ = fixture::make_samples(2, 1);
    json::write_file(dir_ / "images" / (samples_[0].image_id + ".png"), "\x89PNG fake bytes");
    service_ = std::make_unique<ReviewService>(samples_);
    server_ = std::make_unique<ReviewHttpServer>(*service_, HttpOptions{dir_ / "images", {}});
    port_ = server_->bind("127.0.0.1", 0);
    thread_ = std::jthread([this] { server_->listen(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 200 && !server_->running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  void TearDown() override {
    server_->stop();
    thread_ = {};
  }

  httplib::Result post(const json::Json& body) {
    return client_->Post("/api/decisions", body.dump(), "application/json");
  }

  fixture::TempDir dir_;
  std::vector<GroundingSample> samples_;
  std::unique_ptr<ReviewService> service_;
  std::unique_ptr<ReviewHttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::jthread thread_;
  int port_ = 0;
};

}  // namespace

TEST_F(HttpFixture, QueueLeasesThenEmpties) {
  EXPECT_EQ(client_->Get("/api/queue/next")->status, 400);
  std::set<std::string> seen;
  for (int i = 0; i < 2; ++i) {
    const auto res = client_->Get("/api/queue/next?reviewer=ann");
    ASSERT_TRUE(res);
    ASSERT_EQ(res->status, 200);
    const auto body = json::Json::parse(res->body);
    seen.insert(body["sample"]["sample_id"].get<std::string>());
    EXPECT_TRUE(body.contains("lease_id"));
    EXPECT_EQ(body["image_url"], "/api/samples/" + body["sample"]["sample_id"].get<std::string>() + "/image");
  }
  EXPECT_EQ(seen.size(), 2u);
  EXPECT_EQ(client_->Get("/api/queue/next?reviewer=ann")->status, 204);
}

TEST_F(HttpFixture, DecisionStatusCodes) {
  const auto lease = json::Json::parse(client_->Get("/api/queue/next?reviewer=ann")->body);
  const std::string id = lease["sample"]["sample_id"];
  const std::string lease_id = lease["lease_id"];

  EXPECT_EQ(client_->Post("/api/decisions", "{oops", "application/json")->status, 400);
  EXPECT_EQ(post({{"sample_id", id}, {"verdict", "maybe"}, {"reviewer", "ann"}})->status, 400);
  EXPECT_EQ(post({{"sample_id", id}, {"verdict", "edit"}, {"reviewer", "ann"}})->status, 400);
  EXPECT_EQ(post({{"sample_id", "missing"}, {"verdict", "accept"}, {"reviewer", "ann"}})->status, 404);
  EXPECT_EQ(post({{"sample_id", id}, {"verdict", "accept"}, {"reviewer", "bob"}, {"lease_id", "x"}})->status, 409);

  json::Json ok = {{"sample_id", id}, {"verdict", "edit"}, {"edited_text", "The blue vehicle"},
                   {"reviewer", "ann"}, {"lease_id", lease_id}};
  auto res = post(ok);
  ASSERT_EQ(res->status, 200);
  auto ack = json::Json::parse(res->body);
  EXPECT_EQ(ack["status"], "edited");
  EXPECT_EQ(ack["duplicate"], false);
  EXPECT_EQ(ack["template_conformant"], true);

  res = post(ok);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(json::Json::parse(res->body)["duplicate"], true);
  EXPECT_EQ(service_->log().size(), 1u);

  const auto progress = json::Json::parse(client_->Get("/api/progress")->body);
  EXPECT_EQ(progress["edited"], 1);
  EXPECT_EQ(progress["pending"], 1);
  EXPECT_EQ(progress["total"], 2);
}

TEST_F(HttpFixture, ImageRoute) {
  const auto& s = samples_[0];
  const auto res = client_->Get("/api/samples/" + s.sample_id + "/image");
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(res->body, "\x89PNG fake bytes");
  const auto& b = s.bbox;
  char expected[96];
  std::snprintf(expected, sizeof expected, "%.0f,%.0f,%.0f,%.0f", b.x_min(), b.y_min(), b.x_max(), b.y_max());
  EXPECT_EQ(res->get_header_value("X-BBox"), expected);
  EXPECT_EQ(res->get_header_value("X-Image-Size"), "800,800");
  EXPECT_EQ(client_->Get("/api/samples/" + samples_[1].sample_id + "/image")->status, 404);
  EXPECT_EQ(client_->Get("/api/samples/unknown/image")->status, 404);
}

TEST_F(HttpFixture, CorsHeader) {
  const auto res = client_->Get("/api/progress");
  EXPECT_EQ(res->get_header_value("Access-Control-Allow-Origin"), "*");
}
