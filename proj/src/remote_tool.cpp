// JSON-over-HTTP adapter for tools served by an external model service.
//
// Request  (POST <endpoint>):
//   {"version": 1, "tool": str, "input": str, "args": {str: str},
//    "images": [{"id", "filename", "role", "width", "height", "png_base64"}]}
// Response (200):
//   {"observation": str,
//    "images": [{"parent_id": str, "tag": str, "kind": "rgb"|"label"|"change",
//                "png_base64": str}]}          // optional

#include <httplib.h>

#include <json.hpp>

#include "changegpt/error.hpp"
#include "changegpt/http_url.hpp"
#include "changegpt/toolkit.hpp"

namespace changegpt {

using nlohmann::json;

ToolHandler make_remote_handler(std::string tool_name, std::string endpoint, int timeout_s) {
  return [tool_name = std::move(tool_name), endpoint = std::move(endpoint), timeout_s](
             ToolContext& ctx, const ToolArgs& args) -> ToolOutput {
    const auto url = split_url(endpoint);
    json request = {{"version", 1}, {"tool", tool_name}, {"input", args.raw()}};
    json arg_obj = json::object();
    json images = json::array();
    for (const auto& [k, v] : args.values()) {
      arg_obj[k] = v;
      if (const auto* rec = ctx.session.images().find(v)) {
        images.push_back({{"id", rec->self_id},
                          {"filename", rec->filename},
                          {"role", rec->role.token()},
                          {"width", rec->width},
                          {"height", rec->height},
                          {"png_base64", base64_encode(encode_payload(
                                             ctx.session.images().payload(rec->self_id)))}});
      }
    }
    request["args"] = std::move(arg_obj);
    request["images"] = std::move(images);

    httplib::Client client(url.origin);
    client.set_connection_timeout(timeout_s);
    client.set_read_timeout(timeout_s);
    client.set_write_timeout(timeout_s);
    auto res = client.Post(url.path, request.dump(), "application/json");
    if (!res) {
      throw Error(ErrorCode::RemoteError, "tool service " + endpoint + " unreachable: " +
                                              httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw Error(ErrorCode::RemoteError, "tool service returned HTTP " +
                                              std::to_string(res->status) + ": " + res->body);
    }
    ToolOutput out;
    try {
      const auto body = json::parse(res->body);
      out.observation = body.at("observation").get<std::string>();
      for (const auto& img : body.value("images", json::array())) {
        const auto bytes = base64_decode(img.at("png_base64").get<std::string>());
        auto payload = decode_payload(img.value("kind", std::string("rgb")), bytes);
        const auto& rec = ctx.session.register_derived(img.at("parent_id").get<std::string>(),
                                                       img.at("tag").get<std::string>(),
                                                       std::move(payload));
        out.produced_images.push_back(rec.self_id);
        out.observation += "\nimage: " + rec.filename;
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::RemoteError, std::string("malformed tool service response: ") + e.what());
    }
    if (out.observation.empty()) {
      throw Error(ErrorCode::RemoteError, "tool service returned an empty observation");
    }
    return out;
  };
}

}  // namespace changegpt
