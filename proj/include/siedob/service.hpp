#pragma once

#include <memory>
#include <string>

#include "json.hpp"
#include "siedob/pipeline.hpp"

namespace httplib {
class Server;
}

namespace siedob {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// HTTP front end of the pipeline. Handlers are pure functions of the request and the frozen
/// pipeline, so concurrent and repeated requests never influence one another.
class EditService {
 public:
  /// `pipeline` may be null: every model endpoint then answers 503.
  EditService(std::shared_ptr<const Pipeline> pipeline, std::string bank_path);

  /// POST /api/edit. Body: {"image", "seg", "mask": base64 PNG, "instances"?: base64 16-bit PNG,
  /// "styles"?: [{"instance_index", "style_index"}], "seed"?: integer}.
  HttpResponse edit(const std::string& body) const;
  /// GET /api/styles?class=NAME&offset=&limit=
  HttpResponse styles(const std::string& class_name, size_t offset, size_t limit) const;
  /// GET /api/health
  HttpResponse health() const;

  /// A server with the three routes registered.
  std::unique_ptr<httplib::Server> make_server() const;

 private:
  std::shared_ptr<const Pipeline> pipeline_;
  std::string bank_path_;
};

/// Loads the pipeline named by `config` (checkpoint dir overridable via SIEDOB_CHECKPOINT_DIR)
/// and serves until the process is stopped. A failed load still serves, answering 503.
int serve(PipelineConfig config, const std::string& host, int port);

}  // namespace siedob
