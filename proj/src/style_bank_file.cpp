#include "siedob/style_bank.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>

namespace siedob {

const std::vector<StyleCode>& StyleBank::entries(int class_id) const {
  auto it = by_class.find(class_id);
  if (it == by_class.end() || it->second.empty()) {
    throw NoStylesError("style bank has no entries for class " + std::to_string(class_id));
  }
  return it->second;
}

size_t StyleBank::count(int class_id) const {
  auto it = by_class.find(class_id);
  return it == by_class.end() ? 0 : it->second.size();
}

size_t StyleBank::size() const {
  size_t n = 0;
  for (const auto& [cls, codes] : by_class) n += codes.size();
  return n;
}

namespace {

template <class T>
void put_le(std::ostream& out, T value) {
  static_assert(sizeof(T) == 4);
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  out.write(reinterpret_cast<const char*>(&bits), 4);
}

template <class T>
T get_le(std::istream& in) {
  std::uint32_t bits = 0;
  if (!in.read(reinterpret_cast<char*>(&bits), 4)) throw IoError("style bank file truncated");
  if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
  T value;
  std::memcpy(&value, &bits, 4);
  return value;
}

}  // namespace

void save_style_bank(const std::string& path, const StyleBank& bank) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write style bank: " + path);
  out.write("SBNK", 4);
  put_le<std::uint32_t>(out, kStyleBankVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.by_class.size()));
  nlohmann::json sidecar;
  sidecar["version"] = kStyleBankVersion;
  sidecar["dataset_id"] = bank.dataset_id;
  sidecar["encoder_hash"] = bank.encoder_hash;
  sidecar["style_dim"] = kStyleDim;
  sidecar["classes"] = nlohmann::json::array();
  for (const auto& [cls, codes] : bank.by_class) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(cls));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(codes.size()));
    for (const auto& code : codes) {
      for (float v : code.vector) put_le<float>(out, v);
    }
    sidecar["classes"].push_back({{"class_id", cls}, {"count", codes.size()}});
  }
  if (!out) throw IoError("failed writing style bank: " + path);
  std::ofstream json(path + ".json");
  json << sidecar.dump(2) << "\n";
}

StyleBank load_style_bank(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open style bank: " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "SBNK", 4) != 0) throw IoError("not a style bank file: " + path);
  const auto version = get_le<std::uint32_t>(in);
  if (version != kStyleBankVersion) throw IoError("unsupported style bank version " + std::to_string(version));
  StyleBank bank;
  const auto classes = get_le<std::uint32_t>(in);
  for (std::uint32_t c = 0; c < classes; ++c) {
    const int cls = static_cast<int>(get_le<std::uint32_t>(in));
    const auto n = get_le<std::uint32_t>(in);
    auto& codes = bank.by_class[cls];
    codes.resize(n);
    for (auto& code : codes) {
      code.class_id = cls;
      for (auto& v : code.vector) v = get_le<float>(in);
    }
  }
  std::ifstream json(path + ".json");
  if (json) {
    try {
      auto j = nlohmann::json::parse(json);
      bank.dataset_id = j.value("dataset_id", "");
      bank.encoder_hash = j.value("encoder_hash", "");
    } catch (const nlohmann::json::exception&) {
      // Sidecar is informational only.
    }
  }
  return bank;
}

size_t sample_style_index(const StyleBank& bank, int class_id, std::mt19937_64& rng) {
  const auto& codes = bank.entries(class_id);
  return std::uniform_int_distribution<size_t>(0, codes.size() - 1)(rng);
}

StyleCode sample_style(const StyleBank& bank, int class_id, std::mt19937_64& rng) {
  return bank.entries(class_id)[sample_style_index(bank, class_id, rng)];
}

std::string style_thumbnail_dir(const std::string& bank_path) { return bank_path + ".thumbs"; }

}  // namespace siedob
