#include "rangeal/tensor_io.hpp"

#include <cstring>
#include <limits>

#include "rangeal/error.hpp"
#include "rangeal/point_cloud.hpp"

namespace rangeal {

namespace {

constexpr char kMagic[4] = {'M', 'C', 'P', 'T'};
constexpr std::size_t kHeaderBytes = 4 + 5 * 4;

void put_u32(std::vector<std::byte>& out, std::uint32_t v) {
  const auto* p = reinterpret_cast<const std::byte*>(&v);
  out.insert(out.end(), p, p + 4);
}

std::uint32_t get_u32(const std::byte* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

std::vector<std::byte> encode(const TensorHeader& h, std::span<const float> payload, std::span<const std::uint8_t> mask) {
  std::vector<std::byte> out;
  out.reserve(kHeaderBytes + payload.size() * 4 + mask.size());
  for (char c : kMagic) out.push_back(static_cast<std::byte>(c));
  put_u32(out, h.version);
  put_u32(out, h.width);
  put_u32(out, h.height);
  put_u32(out, h.classes);
  put_u32(out, h.iterations);
  const auto* fp = reinterpret_cast<const std::byte*>(payload.data());
  out.insert(out.end(), fp, fp + payload.size() * 4);
  const auto* mp = reinterpret_cast<const std::byte*>(mask.data());
  out.insert(out.end(), mp, mp + mask.size());
  return out;
}

struct Decoded {
  TensorHeader header;
  std::vector<float> payload;
  std::vector<std::uint8_t> mask;
};

Decoded decode(std::span<const std::byte> bytes) {
  Decoded d;
  d.header = decode_header(bytes);
  const auto& h = d.header;
  const std::size_t pixels = std::size_t{h.width} * h.height;
  const std::size_t values = pixels * h.classes * h.iterations;
  d.payload.resize(values);
  std::memcpy(d.payload.data(), bytes.data() + kHeaderBytes, values * 4);
  d.mask.resize(pixels);
  std::memcpy(d.mask.data(), bytes.data() + kHeaderBytes + values * 4, pixels);
  for (auto m : d.mask)
    if (m > 1) throw Error(Errc::MalformedTensor, "validity byte is neither 0 nor 1");
  return d;
}

}  // namespace

TensorHeader decode_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kHeaderBytes) throw Error(Errc::MalformedTensor, "file shorter than the header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw Error(Errc::MalformedTensor, "bad magic");
  TensorHeader h;
  h.version = get_u32(bytes.data() + 4);
  h.width = get_u32(bytes.data() + 8);
  h.height = get_u32(bytes.data() + 12);
  h.classes = get_u32(bytes.data() + 16);
  h.iterations = get_u32(bytes.data() + 20);
  if (h.version != kTensorVersionProbs && h.version != kTensorVersionRangeImage)
    throw Error(Errc::MalformedTensor, "unsupported version " + std::to_string(h.version));
  if (h.width == 0 || h.height == 0 || h.classes == 0 || h.iterations == 0)
    throw Error(Errc::MalformedTensor, "zero dimension in header");
  // Guard the size arithmetic against hostile headers before trusting it.
  const unsigned __int128 pixels = static_cast<unsigned __int128>(h.width) * h.height;
  const unsigned __int128 expected = kHeaderBytes + pixels * h.classes * h.iterations * 4 + pixels;
  if (expected != bytes.size())
    throw Error(Errc::MalformedTensor, "payload length does not match W*H*C*T in header");
  return h;
}

std::vector<std::byte> encode_tensor(const McProbTensor& t) {
  TensorHeader h{kTensorVersionProbs, static_cast<std::uint32_t>(t.width), static_cast<std::uint32_t>(t.height),
                 static_cast<std::uint32_t>(t.classes), static_cast<std::uint32_t>(t.iterations)};
  return encode(h, t.probs, t.valid);
}

McProbTensor decode_tensor(std::span<const std::byte> bytes) {
  Decoded d = decode(bytes);
  if (d.header.version != kTensorVersionProbs) throw Error(Errc::MalformedTensor, "file holds a range image, not probabilities");
  if (d.header.classes < 2) throw Error(Errc::MalformedTensor, "fewer than two classes");
  McProbTensor t;
  t.width = static_cast<int>(d.header.width);
  t.height = static_cast<int>(d.header.height);
  t.classes = static_cast<int>(d.header.classes);
  t.iterations = static_cast<int>(d.header.iterations);
  t.probs = std::move(d.payload);
  t.valid = std::move(d.mask);
  return t;
}

std::vector<std::byte> encode_range_image(const RangeImage& img) {
  const std::uint32_t planes = img.has_instances() ? 7 : 6;
  const std::size_t n = img.pixel_count();
  std::vector<float> payload(n * planes);
  for (std::size_t p = 0; p < n; ++p) {
    float* dst = payload.data() + p * planes;
    for (int c = 0; c < kNumChannels; ++c) dst[c] = img.channels[c][p];
    dst[4] = static_cast<float>(img.labels[p]);
    dst[5] = static_cast<float>(img.point_index[p]);
    if (planes == 7) dst[6] = static_cast<float>(img.instance[p]);
  }
  TensorHeader h{kTensorVersionRangeImage, static_cast<std::uint32_t>(img.width), static_cast<std::uint32_t>(img.height),
                 planes, 1};
  return encode(h, payload, img.valid);
}

RangeImage decode_range_image(std::span<const std::byte> bytes) {
  Decoded d = decode(bytes);
  const auto& h = d.header;
  if (h.version != kTensorVersionRangeImage || h.iterations != 1 || (h.classes != 6 && h.classes != 7))
    throw Error(Errc::MalformedTensor, "file does not hold a range image");
  RangeImage img(static_cast<int>(h.width), static_cast<int>(h.height), h.classes == 7);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const float* src = d.payload.data() + p * h.classes;
    for (int c = 0; c < kNumChannels; ++c) img.channels[c][p] = src[c];
    img.labels[p] = static_cast<ClassId>(src[4]);
    img.point_index[p] = static_cast<std::int32_t>(src[5]);
    if (h.classes == 7) img.instance[p] = static_cast<std::uint32_t>(src[6]);
  }
  img.valid = std::move(d.mask);
  return img;
}

void store_tensor(const McProbTensor& t, const std::filesystem::path& path) { write_file_bytes(path, encode_tensor(t)); }

McProbTensor load_external_tensor(const std::filesystem::path& path) { return decode_tensor(read_file_bytes(path)); }

void store_range_image(const RangeImage& img, const std::filesystem::path& path) {
  write_file_bytes(path, encode_range_image(img));
}

RangeImage load_range_image(const std::filesystem::path& path) { return decode_range_image(read_file_bytes(path)); }

}  // namespace rangeal
