#include <doctest.h>

#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "siedob/image_io.hpp"
#include "siedob/service.hpp"
#include "toy_fixture.hpp"

using namespace siedob;
using nlohmann::json;
using siedob::testing::TempDir;
using siedob::testing::tiny_config;

namespace {

struct Fixture {
  TempDir dir{"service"};
  PipelineConfig config = tiny_config(dir);
  ClassInfo classes = load_classes(config.classes_path);
  std::vector<Sample> data = load_dataset(config.train_dir, classes);
  std::string bank_path = dir.str("bank.sbnk");
  EditService service = make();

  EditService make() {
    auto nets = Networks::create(config, classes);
    auto bank = build_style_bank(data, nets.e_s, config, bank_path);
    auto p = std::make_shared<const Pipeline>(config, classes, nets, std::set<std::string>(all_tags().begin(), all_tags().end()),
                                              bank);
    return EditService(p, bank_path);
  }

  json request(const Sample& s, const Mask& mask) const {
    return {{"image", base64_encode(encode_png(s.image))},
            {"seg", base64_encode(encode_png(s.seg.labels))},
            {"mask", base64_encode(encode_png(mask))}};
  }
};

Mask box(int size, int top, int left, int side) {
  Mask m(size, size);
  for (int y = top; y < top + side; ++y)
    for (int x = left; x < left + side; ++x) m.at(y, x) = 1;
  return m;
}

}  // namespace

TEST_CASE("empty-mask edit returns byte-identical image") {
  Fixture f;
  const auto req = f.request(f.data[0], Mask(32, 32));
  const auto r = f.service.edit(req.dump());
  REQUIRE(r.status == 200);
  const auto body = json::parse(r.body);
  CHECK(body.at("image") == req.at("image"));
  CHECK(body.at("instances").empty());
}

TEST_CASE("seeded requests return identical bytes") {
  Fixture f;
  auto req = f.request(f.data[1], box(32, 4, 4, 20));
  req["seed"] = 17;
  const auto a = f.service.edit(req.dump()), b = f.service.edit(req.dump());
  REQUIRE(a.status == 200);
  CHECK(json::parse(a.body).at("image") == json::parse(b.body).at("image"));
  const auto out = decode_png_image(base64_decode(json::parse(a.body).at("image").get<std::string>()));
  CHECK(out.same_size(f.data[1].image));
}

TEST_CASE("a covered car is generated with a style index served by /api/styles") {
  Fixture f;
  const int car = f.classes.index_of("car");
  const Sample* sample = nullptr;
  Mask cover;
  // No instance map goes over the wire, so the server sees connected components.
  for (const auto& s : f.data) {
    for (const auto& rec : extract_instances(s.seg, std::nullopt))
      if (rec.class_id == car) {
        sample = &s;
        cover = rec.mask;
        break;
      }
    if (sample) break;
  }
  REQUIRE(sample);
  auto req = f.request(*sample, cover);
  auto r = f.service.edit(req.dump());
  REQUIRE(r.status == 200);
  auto list = json::parse(r.body).at("instances");
  REQUIRE(list.size() == 1);
  CHECK(list[0].at("mode") == "GENERATE");
  CHECK(list[0].at("class_name") == "car");
  CHECK(list[0].at("used_style_index").is_number_unsigned());

  const auto styles = json::parse(f.service.styles("car", 0, 10).body).at("styles");
  REQUIRE(!styles.empty());
  for (const auto& entry : styles) {
    req["styles"] = json::array({{{"instance_index", list[0].at("instance_index")}, {"style_index", entry.at("style_index")}}});
    r = f.service.edit(req.dump());
    REQUIRE(r.status == 200);
    CHECK(json::parse(r.body).at("instances")[0].at("used_style_index") == entry.at("style_index"));
  }
}

TEST_CASE("malformed payloads are 400") {
  Fixture f;
  CHECK(f.service.edit("{not json").status == 400);
  CHECK(f.service.edit("[]").status == 400);
  CHECK(f.service.edit(R"({"image": "x"})").status == 400);
  auto req = f.request(f.data[0], box(32, 0, 0, 8));
  req["mask"] = "@@@";
  CHECK(f.service.edit(req.dump()).status == 400);
  req = f.request(f.data[0], Mask(16, 16));
  CHECK(f.service.edit(req.dump()).status == 400);
  req = f.request(f.data[0], box(32, 0, 0, 8));
  req["seed"] = "seven";
  CHECK(f.service.edit(req.dump()).status == 400);
  req = f.request(f.data[0], box(32, 0, 0, 8));
  req["styles"] = json::array({{{"instance_index", 99}, {"style_index", 0}}});
  CHECK(f.service.edit(req.dump()).status == 400);
}

TEST_CASE("unknown segmentation classes are 409") {
  Fixture f;
  auto s = f.data[0];
  s.seg.labels.data[5] = static_cast<int>(f.classes.num_classes);
  CHECK(f.service.edit(f.request(s, box(32, 0, 0, 8)).dump()).status == 409);
}

TEST_CASE("no pipeline answers 503") {
  EditService empty(nullptr, "");
  CHECK(empty.health().status == 503);
  CHECK(empty.edit("{}").status == 503);
  CHECK(empty.styles("car", 0, 10).status == 503);
}

TEST_CASE("styles endpoint pages thumbnails") {
  Fixture f;
  const auto r = f.service.styles("car", 1, 2);
  REQUIRE(r.status == 200);
  const auto body = json::parse(r.body);
  const auto total = body.at("total").get<size_t>();
  REQUIRE(total >= 2);
  CHECK(json::parse(f.service.styles("car", 0, 1000).body).at("styles").size() == total);
  CHECK(body.at("styles").size() == std::min<size_t>(2, total - 1));
  CHECK(body.at("styles")[0].at("style_index") == 1);
  const auto thumb = decode_png_image(base64_decode(body.at("styles")[0].at("thumbnail").get<std::string>()));
  CHECK(thumb.height == f.config.crop_size);
  CHECK(f.service.styles("unicorn", 0, 10).status == 404);
  CHECK(f.service.styles("road", 0, 10).status == 404);
}

TEST_CASE("health lists classes and loaded networks") {
  Fixture f;
  const auto r = f.service.health();
  REQUIRE(r.status == 200);
  const auto body = json::parse(r.body);
  CHECK(body.at("classes") == f.classes.names);
  CHECK(body.at("checkpoint_hash") == f.config.architecture_hash(f.classes));
}

TEST_CASE("HTTP routes round trip over a socket") {
  Fixture f;
  auto server = f.service.make_server();
  const int port = server->bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server->listen_after_bind(); });
  server->wait_until_ready();
  httplib::Client client("127.0.0.1", port);
  const auto req = f.request(f.data[2], Mask(32, 32));
  auto r = client.Post("/api/edit", req.dump(), "application/json");
  REQUIRE(r);
  CHECK(r->status == 200);
  CHECK(json::parse(r->body).at("image") == req.at("image"));
  r = client.Post("/api/edit", "garbage", "application/json");
  REQUIRE(r);
  CHECK(r->status == 400);
  r = client.Get("/api/styles?class=car&offset=0&limit=3");
  REQUIRE(r);
  CHECK(r->status == 200);
  r = client.Get("/api/styles?class=car&offset=minus");
  REQUIRE(r);
  CHECK(r->status == 400);
  r = client.Get("/api/health");
  REQUIRE(r);
  CHECK(r->status == 200);
  server->stop();
  t.join();
}
