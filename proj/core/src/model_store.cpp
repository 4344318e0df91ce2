// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/model_store.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "tinyeats/byte_io.hpp"
#include "tinyeats/crc32.hpp"
#include "tinyeats/errors.hpp"
#include "tinyeats/file_io.hpp"

namespace tinyeats {
namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'E', 'G', 'M'};

template <typename Model, typename Fn>
void for_each_qtensor(Model& m, Fn&& fn) {
  fn(m.gru1.reset);
  fn(m.gru1.update);
  fn(m.gru1.candidate);
  fn(m.gru2.reset);
  fn(m.gru2.update);
  fn(m.gru2.candidate);
  fn(m.fc);
  fn(m.out);
}

// Tensor shapes implied by the header, in canonical order.
std::vector<std::pair<std::size_t, std::size_t>> tensor_shapes(const ModelDims& d) {
  return {{d.hidden1, d.input + d.hidden1}, {d.hidden1, d.input + d.hidden1},
          {d.hidden1, d.input + d.hidden1}, {d.hidden2, d.hidden1 + d.hidden2},
          {d.hidden2, d.hidden1 + d.hidden2}, {d.hidden2, d.hidden1 + d.hidden2},
          {d.fc, d.hidden2},                {d.classes, d.fc}};
}

std::size_t container_size(ModelKind kind, const ModelDims& d) {
  std::size_t total = kModelHeaderBytes + 4;
  for (auto [r, c] : tensor_shapes(d)) {
    total += 4 + (kind == ModelKind::kFloat ? 8 * r * c : 8 + 4 + 1 + r * c);
  }
  return total;
}

void put_header(detail::ByteWriter& w, ModelKind kind, const ModelDims& d, const FeatureNorm& n) {
  w.put_bytes(kMagic);
  w.put<std::uint16_t>(kModelVersion);
  w.put(static_cast<std::uint8_t>(kind));
  for (std::size_t v : {d.input, d.hidden1, d.hidden2, d.fc, d.classes}) {
    w.put(static_cast<std::uint16_t>(v));
  }
  w.put(n.floor);
  w.put(n.ceil);
}

void require_deployable_dims(const ModelDims& d) {
  if (d != kTinyEatsDims) {
    throw Error(Errc::kDimensionMismatch,
                "container dimensions (" + std::to_string(d.input) + "," + std::to_string(d.hidden1) +
                    "," + std::to_string(d.hidden2) + "," + std::to_string(d.fc) + "," +
                    std::to_string(d.classes) + ") differ from (65,16,16,8,2)");
  }
}

void check_block_shape(detail::ByteReader& r, std::size_t rows, std::size_t cols) {
  const auto br = r.get<std::uint16_t>();
  const auto bc = r.get<std::uint16_t>();
  if (br != rows || bc != cols) {
    throw Error(Errc::kDimensionMismatch, "tensor block shape " + std::to_string(br) + "x" +
                                              std::to_string(bc) + " does not match header");
  }
}

}  // namespace

std::vector<std::uint8_t> encode_model(const FloatModel& m) {
  validate(m);
  require_deployable_dims(m.dims);
  detail::ByteWriter w;
  put_header(w, ModelKind::kFloat, m.dims, m.norm);
  for_each_tensor(m, [&](const Matrix& t) {
    w.put(static_cast<std::uint16_t>(t.rows));
    w.put(static_cast<std::uint16_t>(t.cols));
    for (double v : t.data) w.put(v);
  });
  w.put(crc32_ieee(w.bytes()));
  return std::move(w.bytes());
}

std::vector<std::uint8_t> encode_model(const QuantModel& qm) {
  validate(qm);
  require_deployable_dims(qm.dims);
  detail::ByteWriter w;
  put_header(w, ModelKind::kQuant, qm.dims, qm.norm);
  for_each_qtensor(qm, [&](const QuantTensor& t) {
    w.put(static_cast<std::uint16_t>(t.rows));
    w.put(static_cast<std::uint16_t>(t.cols));
    w.put(t.scale);
    w.put(t.requant.mult);
    w.put(t.requant.shift);
    for (auto v : t.values) w.put(v);
  });
  w.put(crc32_ieee(w.bytes()));
  if (w.size() > kQuantBudgetBytes) {
    throw Error(Errc::kBudgetExceeded, "quant container " + std::to_string(w.size()) +
                                           " bytes exceeds the 12288-byte budget");
  }
  return std::move(w.bytes());
}

AnyModel decode_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(Errc::kTruncated, "model file shorter than its magic");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(Errc::kBadMagic, "not a TEGM model container");
  }
  if (bytes.size() < kModelHeaderBytes) throw Error(Errc::kTruncated, "model header truncated");

  detail::ByteReader r(bytes);
  r.get_bytes(4);
  if (const auto version = r.get<std::uint16_t>(); version != kModelVersion) {
    throw Error(Errc::kUnsupportedVersion, "unsupported TEGM version " + std::to_string(version));
  }
  const auto kind_byte = r.get<std::uint8_t>();
  if (kind_byte > 1) throw Error(Errc::kBadKind, "unknown model kind " + std::to_string(kind_byte));
  const auto kind = static_cast<ModelKind>(kind_byte);

  ModelDims d;
  d.input = r.get<std::uint16_t>();
  d.hidden1 = r.get<std::uint16_t>();
  d.hidden2 = r.get<std::uint16_t>();
  d.fc = r.get<std::uint16_t>();
  d.classes = r.get<std::uint16_t>();
  require_deployable_dims(d);

  FeatureNorm norm;
  norm.floor = r.get<double>();
  norm.ceil = r.get<double>();

  const std::size_t expected = container_size(kind, d);
  if (bytes.size() < expected) {
    throw Error(Errc::kTruncated, "model container truncated: " + std::to_string(bytes.size()) +
                                      " of " + std::to_string(expected) + " bytes");
  }
  if (bytes.size() > expected) throw Error(Errc::kTrailingBytes, "bytes after model CRC");
  const auto stored = detail::ByteReader(bytes.subspan(expected - 4)).get<std::uint32_t>();
  if (crc32_ieee(bytes.first(expected - 4)) != stored) {
    throw Error(Errc::kCrcMismatch, "model container CRC mismatch");
  }
  if (!std::isfinite(norm.floor) || !std::isfinite(norm.ceil) || !(norm.ceil > norm.floor)) {
    throw Error(Errc::kInvalidPayload, "invalid normalization constants");
  }

  const auto shapes = tensor_shapes(d);
  std::size_t idx = 0;
  if (kind == ModelKind::kFloat) {
    FloatModel m(d);
    m.norm = norm;
    for_each_tensor(m, [&](Matrix& t) {
      check_block_shape(r, shapes[idx].first, shapes[idx].second);
      ++idx;
      for (double& v : t.data) v = r.get<double>();
    });
    try {
      validate(m);
    } catch (const Error& e) {
      throw Error(Errc::kInvalidPayload, e.what());
    }
    return m;
  }

  QuantModel qm;
  qm.dims = d;
  qm.norm = norm;
  for_each_qtensor(qm, [&](QuantTensor& t) {
    check_block_shape(r, shapes[idx].first, shapes[idx].second);
    t.rows = shapes[idx].first;
    t.cols = shapes[idx].second;
    ++idx;
    t.scale = r.get<double>();
    t.requant.mult = r.get<std::int32_t>();
    t.requant.shift = r.get<std::uint8_t>();
    t.values.resize(t.rows * t.cols);
    for (auto& v : t.values) v = r.get<std::int8_t>();
  });
  validate(qm);
  return qm;
}

std::size_t save_model(const FloatModel& m, const std::filesystem::path& path) {
  const auto bytes = encode_model(m);
  write_file_bytes(path, bytes);
  return bytes.size();
}

std::size_t save_model(const QuantModel& qm, const std::filesystem::path& path) {
  const auto bytes = encode_model(qm);
  write_file_bytes(path, bytes);
  return bytes.size();
}

AnyModel load_model(const std::filesystem::path& path) { return decode_model(read_file_bytes(path)); }

std::string export_firmware_array(const QuantModel& qm, std::string_view symbol) {
  const bool valid =
      !symbol.empty() && (std::isalpha(static_cast<unsigned char>(symbol[0])) || symbol[0] == '_') &&
      std::all_of(symbol.begin(), symbol.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
      });
  if (!valid) throw Error(Errc::kInvalidSymbol, "invalid C identifier: '" + std::string(symbol) + "'");

  const auto bytes = encode_model(qm);
  std::ostringstream os;
  os << "// TEGM quantized model container, " << bytes.size() << " bytes.\n"
     << "#include <stdint.h>\n\n"
     << "const uint32_t " << symbol << "_len = " << bytes.size() << ";\n"
     << "const uint8_t " << symbol << "[" << bytes.size() << "] = {\n";
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    if (i % 12 == 0) os << "  ";
    os << static_cast<unsigned>(bytes[i]);
    if (i + 1 < bytes.size()) os << ',';
    os << ((i % 12 == 11 || i + 1 == bytes.size()) ? "\n" : " ");
  }
  os << "};\n";
  return os.str();
}

}  // namespace tinyeats
