#include "storyecho/provider.hpp"

#include <httplib.h>

namespace storyecho {

namespace {

std::string stage_for(TypeTag tag, const Json& payload)
{
    switch (tag) {
    case TypeTag::StoryFramework: return "framework";
    case TypeTag::RecapAndGoal: return "summarize";
    case TypeTag::EpisodeDraft: return payload.contains("food_name") ? "ending" : "episode";
    case TypeTag::FeedbackText: return "feedback";
    default: return "text";
    }
}

std::unique_ptr<httplib::Client> make_client(const HttpProviderConfig& config)
{
    auto client = std::make_unique<httplib::Client>(config.base_url);
    if (!client->is_valid()) {
        fail(Errc::ConfigError, "provider base_url is not usable: " + config.base_url);
    }
    if (!config.api_key.empty()) {
        client->set_bearer_token_auth(config.api_key);
    }
    client->set_connection_timeout(config.timeout);
    client->set_read_timeout(config.timeout);
    client->set_write_timeout(config.timeout);
    return client;
}

Json checked_json(const httplib::Result& res, const std::string& what)
{
    if (!res) {
        fail(Errc::ProviderError, what + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        fail(Errc::ProviderError,
             what + ": HTTP " + std::to_string(res->status) + " " + res->body.substr(0, 200));
    }
    try {
        return parse_json(res->body);
    } catch (const Error& e) {
        fail(Errc::ProviderError, what + ": response is not JSON");
    }
}

std::string image_from_response(AssetStore& assets, const Json& body)
{
    try {
        const auto& data = body.at("data").at(0);
        return assets.put_asset({base64_decode(data.at("b64_json").get<std::string>()),
                                 "image/png"});
    } catch (const Json::exception& e) {
        fail(Errc::ProviderError, std::string("image response: ") + e.what());
    } catch (const Error& e) {
        fail(Errc::ProviderError, std::string("image response: ") + e.what());
    }
}

} // namespace

HttpProvider::HttpProvider(AssetStore& assets, HttpProviderConfig config)
    : assets_(assets), config_(std::move(config))
{
    if (config_.base_url.empty()) {
        fail(Errc::ConfigError, "provider base_url is empty");
    }
}

std::string HttpProvider::model_for(const std::string& stage) const
{
    if (auto it = config_.models.find(stage); it != config_.models.end()) {
        return it->second;
    }
    if (auto it = config_.models.find("default"); it != config_.models.end()) {
        return it->second;
    }
    fail(Errc::ConfigError, "no model configured for stage " + stage);
}

std::string HttpProvider::complete(const std::string& system_prompt,
                                   const std::string& user_payload, TypeTag output_tag)
{
    Json payload;
    try {
        payload = parse_json(user_payload);
    } catch (const Error&) {
        payload = Json::object();
    }
    const Json request{
        {"model", model_for(stage_for(output_tag, payload))},
        {"messages",
         {{{"role", "system"}, {"content", system_prompt}},
          {{"role", "user"}, {"content", user_payload}}}},
        {"response_format", {{"type", "json_object"}}},
    };
    auto client = make_client(config_);
    note_network_call();
    const auto body = checked_json(
        client->Post("/v1/chat/completions", dump_canonical(request), "application/json"),
        "chat completion");
    std::string content;
    try {
        content = body.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const Json::exception& e) {
        fail(Errc::ProviderError, std::string("chat completion: ") + e.what());
    }
    try {
        check_structure(output_tag, content);
    } catch (const Error& e) {
        fail(Errc::ProviderError, "chat completion does not match " +
                                      std::string(enum_name(output_tag)) + ": " + e.detail());
    }
    return content;
}

std::string HttpProvider::generate_image(const std::string& prompt,
                                         const std::optional<std::string>& reference_asset)
{
    auto client = make_client(config_);
    const auto model = model_for("page_image");
    if (reference_asset) {
        const auto ref = assets_.get_asset(*reference_asset);
        if (!ref) {
            fail(Errc::ProviderError, "reference image not found: " + *reference_asset);
        }
        const httplib::MultipartFormDataItems items{
            {"model", model, "", ""},
            {"prompt", prompt, "", ""},
            {"response_format", "b64_json", "", ""},
            {"image", ref->bytes, "reference", ref->media_type},
        };
        note_network_call();
        return image_from_response(assets_, checked_json(client->Post("/v1/images/edits", items),
                                                         "image edit"));
    }
    const Json request{{"model", model}, {"prompt", prompt}, {"response_format", "b64_json"}};
    note_network_call();
    return image_from_response(
        assets_, checked_json(client->Post("/v1/images/generations", dump_canonical(request),
                                           "application/json"),
                              "image generation"));
}

std::string HttpProvider::synthesize_speech(const std::string& text)
{
    const Json request{{"model", model_for("speech")}, {"input", text}, {"voice", "alloy"}};
    auto client = make_client(config_);
    note_network_call();
    auto res = client->Post("/v1/audio/speech", dump_canonical(request), "application/json");
    if (!res) {
        fail(Errc::ProviderError, "speech: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        fail(Errc::ProviderError, "speech: HTTP " + std::to_string(res->status));
    }
    const auto type = res->get_header_value("Content-Type");
    return assets_.put_asset({res->body, type.empty() ? "audio/mpeg" : type});
}

std::string HttpProvider::transcribe(const std::string& audio_asset)
{
    const auto audio = assets_.get_asset(audio_asset);
    if (!audio) {
        fail(Errc::ProviderError, "audio asset not found: " + audio_asset);
    }
    const httplib::MultipartFormDataItems items{
        {"model", model_for("transcribe"), "", ""},
        {"file", audio->bytes, "audio", audio->media_type},
    };
    auto client = make_client(config_);
    note_network_call();
    const auto body =
        checked_json(client->Post("/v1/audio/transcriptions", items), "transcription");
    try {
        return body.at("text").get<std::string>();
    } catch (const Json::exception& e) {
        fail(Errc::ProviderError, std::string("transcription: ") + e.what());
    }
}

} // namespace storyecho
