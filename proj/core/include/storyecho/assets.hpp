#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

namespace storyecho {

struct Blob {
    std::string bytes;
    std::string media_type;

    bool operator==(const Blob&) const = default;
};

// Content-addressed media storage. Asset ids are the lowercase hex SHA-256 of
// the bytes, so storing the same bytes twice yields the same id.
class AssetStore {
public:
    virtual ~AssetStore() = default;
    virtual std::string put_asset(const Blob& blob) = 0;
    virtual std::optional<Blob> get_asset(const std::string& asset_id) const = 0;
};

class MemoryAssetStore : public AssetStore {
public:
    std::string put_asset(const Blob& blob) override;
    std::optional<Blob> get_asset(const std::string& asset_id) const override;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, Blob> blobs_;
};

std::string sha256_hex(std::string_view bytes);
std::string base64_encode(std::string_view bytes);
// Throws ParseError on malformed input.
std::string base64_decode(std::string_view text);
bool is_asset_id(std::string_view text);

} // namespace storyecho
