#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace simboot {

/// 256-bit content hash. Rendered as lowercase hex in every file format.
struct Digest {
  std::array<std::uint8_t, 32> bytes{};

  std::string hex() const;
  static std::optional<Digest> from_hex(std::string_view text);

  friend bool operator==(const Digest&, const Digest&) = default;
  friend auto operator<=>(const Digest&, const Digest&) = default;
};

/// Incremental SHA-256.
class Hasher {
 public:
  Hasher();
  ~Hasher();
  Hasher(const Hasher&) = delete;
  Hasher& operator=(const Hasher&) = delete;
  Hasher(Hasher&&) noexcept;
  Hasher& operator=(Hasher&&) noexcept;

  Hasher& update(std::string_view bytes);
  Hasher& update_u64(std::uint64_t v);
  Hasher& update_i64(std::int64_t v);
  // Length-prefixed, so concatenations of fields never collide.
  Hasher& update_field(std::string_view bytes);

  Digest finish();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Digest sha256(std::string_view bytes);

}  // namespace simboot
