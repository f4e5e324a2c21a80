#include "entrofuse/tensor_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "entrofuse/error.hpp"

namespace entrofuse {

namespace {

using nlohmann::json;

void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) {
    throw Error(ErrorCode::IoFailure, "read failed for " + path.string());
  }
  return std::move(buf).str();
}

void write_file_bytes(const std::filesystem::path& path,
                      const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() +
                                          " for writing");
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write failed for " + path.string());
  }
}

json parse_pten_header(const std::string& bytes,
                       const std::filesystem::path& path, std::size_t& offset) {
  if (bytes.size() < 9) {
    throw Error(ErrorCode::MagicMismatch,
                path.string() + " is too short to hold a PTEN header");
  }
  if (std::memcmp(bytes.data(), kPtenMagic, 4) != 0) {
    throw Error(ErrorCode::MagicMismatch,
                path.string() + " does not start with the PTEN magic");
  }
  const auto version = static_cast<unsigned char>(bytes[4]);
  if (version != kPtenVersion) {
    std::ostringstream msg;
    msg << path.string() << ": unsupported PTEN version "
        << static_cast<unsigned>(version);
    throw Error(ErrorCode::MagicMismatch, msg.str());
  }
  const std::uint32_t header_len =
      get_u32_le(reinterpret_cast<const unsigned char*>(bytes.data()) + 5);
  if (bytes.size() < 9 + static_cast<std::size_t>(header_len)) {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": declared header length exceeds file size");
  }
  json header;
  try {
    header = json::parse(bytes.substr(9, header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": header is not valid JSON (" + e.what() +
                    ")");
  }
  offset = 9 + header_len;
  return header;
}

} // namespace

ProbabilityStack read_stack(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t payload_offset = 0;
  const json header = parse_pten_header(bytes, path, payload_offset);

  if (!header.is_object() || !header.contains("dtype") ||
      !header.contains("shape") || !header.contains("order")) {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": header must declare dtype, shape, order");
  }
  if (header["dtype"] != "f32") {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": dtype must be \"f32\"");
  }
  if (header["order"] != "row-major") {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": order must be \"row-major\"");
  }
  const json& shape = header["shape"];
  if (!shape.is_array() || shape.size() != 4) {
    throw Error(ErrorCode::HeaderMalformed,
                path.string() + ": shape must be [K, M, H, W]");
  }
  ProbabilityStack stack;
  std::size_t dims[4];
  for (std::size_t d = 0; d < 4; ++d) {
    if (!shape[d].is_number_unsigned() || shape[d].get<std::uint64_t>() == 0) {
      throw Error(ErrorCode::HeaderMalformed,
                  path.string() + ": shape entries must be positive integers");
    }
    dims[d] = shape[d].get<std::size_t>();
  }
  stack.k_models = dims[0];
  stack.m_classes = dims[1];
  stack.height = dims[2];
  stack.width = dims[3];

  const std::size_t expected = stack.value_count() * 4;
  const std::size_t actual = bytes.size() - payload_offset;
  if (actual != expected) {
    std::ostringstream msg;
    msg << path.string() << ": payload holds " << actual
        << " bytes, shape requires " << expected
        << (actual < expected ? " (truncated)" : " (trailing bytes)");
    throw Error(ErrorCode::PayloadTruncated, msg.str());
  }

  stack.data.resize(stack.value_count());
  const auto* p =
      reinterpret_cast<const unsigned char*>(bytes.data()) + payload_offset;
  for (std::size_t i = 0; i < stack.data.size(); ++i, p += 4) {
    stack.data[i] = std::bit_cast<float>(get_u32_le(p));
  }

  try {
    stack.validate();
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
  return stack;
}

std::vector<std::string> read_stack_model_names(
    const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t payload_offset = 0;
  const json header = parse_pten_header(bytes, path, payload_offset);
  std::vector<std::string> names;
  if (header.is_object() && header.contains("model_names")) {
    const json& list = header["model_names"];
    if (!list.is_array()) {
      throw Error(ErrorCode::HeaderMalformed,
                  path.string() + ": model_names must be an array");
    }
    for (const auto& n : list) {
      if (!n.is_string()) {
        throw Error(ErrorCode::HeaderMalformed,
                    path.string() + ": model_names entries must be strings");
      }
      names.push_back(n.get<std::string>());
    }
  }
  return names;
}

void write_stack(const ProbabilityStack& stack,
                 const std::filesystem::path& path,
                 const std::vector<std::string>& model_names) {
  stack.validate();
  if (!model_names.empty() && model_names.size() != stack.k_models) {
    throw Error(ErrorCode::LengthMismatch,
                "model_names size does not match K");
  }

  json header = {
      {"dtype", "f32"},
      {"order", "row-major"},
      {"shape", {stack.k_models, stack.m_classes, stack.height, stack.width}},
  };
  if (!model_names.empty()) header["model_names"] = model_names;
  const std::string header_text = header.dump();

  std::string bytes;
  bytes.reserve(9 + header_text.size() + stack.data.size() * 4);
  bytes.append(kPtenMagic, 4);
  bytes.push_back(static_cast<char>(kPtenVersion));
  put_u32_le(bytes, static_cast<std::uint32_t>(header_text.size()));
  bytes += header_text;
  for (const float v : stack.data) {
    put_u32_le(bytes, std::bit_cast<std::uint32_t>(v));
  }
  write_file_bytes(path, bytes);
}

LabelMask read_mask(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t pos = 0;

  // PNM header tokens separated by whitespace, '#' starts a comment.
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(
                                     bytes[pos]))) {
      ++pos;
    }
    return bytes.substr(start, pos - start);
  };

  if (next_token() != "P5") {
    throw Error(ErrorCode::NotP5, path.string() + " is not a binary PGM (P5)");
  }
  auto parse_dim = [&](const char* what) -> std::size_t {
    const std::string tok = next_token();
    std::size_t value = 0;
    for (const char c : tok) {
      if (c < '0' || c > '9') {
        throw Error(ErrorCode::NotP5,
                    path.string() + ": malformed " + what + " field");
      }
      value = value * 10 + static_cast<std::size_t>(c - '0');
    }
    if (tok.empty() || value == 0) {
      throw Error(ErrorCode::NotP5,
                  path.string() + ": malformed " + what + " field");
    }
    return value;
  };
  const std::size_t width = parse_dim("width");
  const std::size_t height = parse_dim("height");
  const std::size_t maxval = parse_dim("maxval");
  if (maxval != 255) {
    throw Error(ErrorCode::NotP5,
                path.string() + ": maxval must be 255 for label masks");
  }
  // Exactly one whitespace byte separates the header from the pixels.
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw Error(ErrorCode::NotP5, path.string() + ": missing pixel data");
  }
  ++pos;

  LabelMask mask;
  mask.width = width;
  mask.height = height;
  if (bytes.size() - pos != width * height) {
    std::ostringstream msg;
    msg << path.string() << ": pixel payload holds " << bytes.size() - pos
        << " bytes, dimensions require " << width * height;
    throw Error(ErrorCode::NotP5, msg.str());
  }
  mask.labels.assign(
      reinterpret_cast<const std::uint8_t*>(bytes.data()) + pos,
      reinterpret_cast<const std::uint8_t*>(bytes.data()) + bytes.size());
  return mask;
}

void write_mask(const LabelMask& mask, const std::filesystem::path& path) {
  if (mask.height == 0 || mask.width == 0 ||
      mask.labels.size() != mask.pixel_count()) {
    throw Error(ErrorCode::DimensionMismatch,
                "mask dimensions do not match its label buffer");
  }
  std::string bytes = "P5\n" + std::to_string(mask.width) + " " +
                      std::to_string(mask.height) + "\n255\n";
  bytes.append(reinterpret_cast<const char*>(mask.labels.data()),
               mask.labels.size());
  write_file_bytes(path, bytes);
}

} // namespace entrofuse
