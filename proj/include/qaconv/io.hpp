#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "qaconv/augment.hpp"
#include "qaconv/eval.hpp"
#include "qaconv/head.hpp"
#include "qaconv/score_matrix.hpp"
#include "qaconv/store.hpp"

namespace qaconv {

// Binary formats are fixed little-endian with a 4-byte magic so fixtures and
// golden files stay portable:
//   QFMP v1: n, d, h, w (u32) + n*d*h*w f32, order (sample, channel, row, col)
//   QSIM:    stage, n_query, n_gallery (u32) + row-major f32 payload
//   QIMG v1: n, c, h, w (u32) + f32 payload, order (sample, channel, row, col)
//   QHED v1: feat (u32) + f64 fields (bn1 vectors, fc, bn2 scalars, momentum)
// Metadata is line-oriented text: "id camera [frame fps]".

namespace detail {

inline void put_u32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                              static_cast<unsigned char>((v >> 8) & 0xff),
                              static_cast<unsigned char>((v >> 16) & 0xff),
                              static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw FormatError(std::string("truncated ") + what);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void put_f32(std::ostream& os, float v) { put_u32(os, std::bit_cast<std::uint32_t>(v)); }

inline float get_f32(std::istream& is, const char* what) {
  return std::bit_cast<float>(get_u32(is, what));
}

inline void put_f64(std::ostream& os, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  put_u32(os, static_cast<std::uint32_t>(bits & 0xffffffffu));
  put_u32(os, static_cast<std::uint32_t>(bits >> 32));
}

inline double get_f64(std::istream& is, const char* what) {
  const std::uint64_t lo = get_u32(is, what);
  const std::uint64_t hi = get_u32(is, what);
  return std::bit_cast<double>(lo | (hi << 32));
}

inline void put_magic(std::ostream& os, const char magic[5]) { os.write(magic, 4); }

inline void expect_magic(std::istream& is, const char magic[5], const char* what) {
  char got[4];
  if (!is.read(got, 4) || got[0] != magic[0] || got[1] != magic[1] || got[2] != magic[2] ||
      got[3] != magic[3])
    throw FormatError(std::string(what) + ": bad magic");
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open: " + path);
  return is;
}

inline void expect_eof(std::istream& is, const char* what) {
  char extra;
  if (is.read(&extra, 1)) throw FormatError(std::string(what) + ": trailing bytes");
}

}  // namespace detail

inline void write_feature_maps(const std::string& path, const std::vector<FeatureMap>& maps) {
  if (maps.empty()) throw PreconditionError("write_feature_maps: nothing to write");
  for (const auto& m : maps)
    if (!m.well_formed() || !m.same_profile(maps.front()))
      throw ProfileMismatch("write_feature_maps: mixed or malformed profiles");
  auto os = detail::open_out(path);
  detail::put_magic(os, "QFMP");
  detail::put_u32(os, 1);  // version
  detail::put_u32(os, static_cast<std::uint32_t>(maps.size()));
  detail::put_u32(os, static_cast<std::uint32_t>(maps.front().d));
  detail::put_u32(os, static_cast<std::uint32_t>(maps.front().h));
  detail::put_u32(os, static_cast<std::uint32_t>(maps.front().w));
  for (const auto& m : maps)
    for (float v : m.data) detail::put_f32(os, v);
  if (!os) throw FormatError("write failed: " + path);
}

inline std::vector<FeatureMap> read_feature_maps(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "QFMP", "feature map file");
  const std::uint32_t version = detail::get_u32(is, "feature map header");
  if (version != 1) throw FormatError("feature map file: unsupported version");
  const std::uint32_t n = detail::get_u32(is, "feature map header");
  const std::uint32_t d = detail::get_u32(is, "feature map header");
  const std::uint32_t h = detail::get_u32(is, "feature map header");
  const std::uint32_t w = detail::get_u32(is, "feature map header");
  if (n == 0 || d == 0 || h == 0 || w == 0)
    throw FormatError("feature map file: empty dimensions");
  std::vector<FeatureMap> maps;
  maps.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    FeatureMap fm(static_cast<int>(d), static_cast<int>(h), static_cast<int>(w));
    for (auto& v : fm.data) v = detail::get_f32(is, "feature map payload");
    maps.push_back(std::move(fm));
  }
  detail::expect_eof(is, "feature map file");
  return maps;
}

inline void write_scores(const std::string& path, const SimilarityMatrix& m) {
  if (!m.well_formed()) throw PreconditionError("write_scores: malformed matrix");
  auto os = detail::open_out(path);
  detail::put_magic(os, "QSIM");
  detail::put_u32(os, static_cast<std::uint32_t>(m.stage));
  detail::put_u32(os, m.n_query);
  detail::put_u32(os, m.n_gallery);
  for (float v : m.scores) detail::put_f32(os, v);
  if (!os) throw FormatError("write failed: " + path);
}

inline SimilarityMatrix read_scores(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "QSIM", "score file");
  const std::uint32_t stage = detail::get_u32(is, "score header");
  if (stage > 3) throw FormatError("score file: unknown stage tag");
  const std::uint32_t nq = detail::get_u32(is, "score header");
  const std::uint32_t ng = detail::get_u32(is, "score header");
  SimilarityMatrix m(nq, ng, static_cast<ScoreStage>(stage));
  for (auto& v : m.scores) v = detail::get_f32(is, "score payload");
  detail::expect_eof(is, "score file");
  return m;
}

inline void write_images(const std::string& path, const std::vector<ImageTensor>& images) {
  if (images.empty()) throw PreconditionError("write_images: nothing to write");
  for (const auto& im : images)
    if (im.height != images.front().height || im.width != images.front().width)
      throw ProfileMismatch("write_images: mixed image sizes");
  auto os = detail::open_out(path);
  detail::put_magic(os, "QIMG");
  detail::put_u32(os, 1);  // version
  detail::put_u32(os, static_cast<std::uint32_t>(images.size()));
  detail::put_u32(os, static_cast<std::uint32_t>(ImageTensor::channels));
  detail::put_u32(os, static_cast<std::uint32_t>(images.front().height));
  detail::put_u32(os, static_cast<std::uint32_t>(images.front().width));
  for (const auto& im : images)
    for (float v : im.data) detail::put_f32(os, v);
  if (!os) throw FormatError("write failed: " + path);
}

inline std::vector<ImageTensor> read_images(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "QIMG", "image file");
  if (detail::get_u32(is, "image header") != 1)
    throw FormatError("image file: unsupported version");
  const std::uint32_t n = detail::get_u32(is, "image header");
  const std::uint32_t c = detail::get_u32(is, "image header");
  const std::uint32_t h = detail::get_u32(is, "image header");
  const std::uint32_t w = detail::get_u32(is, "image header");
  if (c != ImageTensor::channels) throw FormatError("image file: channel count must be 3");
  if (n == 0 || h == 0 || w == 0) throw FormatError("image file: empty dimensions");
  std::vector<ImageTensor> images;
  images.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    ImageTensor im(static_cast<int>(h), static_cast<int>(w));
    for (auto& v : im.data) v = detail::get_f32(is, "image payload");
    images.push_back(std::move(im));
  }
  detail::expect_eof(is, "image file");
  return images;
}

inline void write_head(const std::string& path, const HeadParams& p) {
  if (!p.valid()) throw PreconditionError("write_head: malformed HeadParams");
  auto os = detail::open_out(path);
  detail::put_magic(os, "QHED");
  detail::put_u32(os, 1);  // version
  detail::put_u32(os, static_cast<std::uint32_t>(p.feat));
  for (const auto* vec : {&p.bn1_gamma, &p.bn1_beta, &p.bn1_rmean, &p.bn1_rvar, &p.fc_weight})
    for (double v : *vec) detail::put_f64(os, v);
  detail::put_f64(os, p.fc_bias);
  detail::put_f64(os, p.bn2_gamma);
  detail::put_f64(os, p.bn2_beta);
  detail::put_f64(os, p.bn2_rmean);
  detail::put_f64(os, p.bn2_rvar);
  detail::put_f64(os, p.momentum);
  if (!os) throw FormatError("write failed: " + path);
}

inline HeadParams read_head(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "QHED", "head file");
  if (detail::get_u32(is, "head header") != 1)
    throw FormatError("head file: unsupported version");
  const std::uint32_t feat = detail::get_u32(is, "head header");
  if (feat == 0) throw FormatError("head file: empty feature size");
  HeadParams p = HeadParams::identity(static_cast<int>(feat));
  for (auto* vec : {&p.bn1_gamma, &p.bn1_beta, &p.bn1_rmean, &p.bn1_rvar, &p.fc_weight})
    for (auto& v : *vec) v = detail::get_f64(is, "head payload");
  p.fc_bias = detail::get_f64(is, "head payload");
  p.bn2_gamma = detail::get_f64(is, "head payload");
  p.bn2_beta = detail::get_f64(is, "head payload");
  p.bn2_rmean = detail::get_f64(is, "head payload");
  p.bn2_rvar = detail::get_f64(is, "head payload");
  p.momentum = detail::get_f64(is, "head payload");
  detail::expect_eof(is, "head file");
  p.mode = HeadParams::Mode::eval;
  if (!p.valid()) throw FormatError("head file: invalid parameter values");
  return p;
}

/// One text record per sample: "id camera" or "id camera frame fps".
/// When frame and fps are present the record's time is frame/fps seconds.
inline void write_metadata(const std::string& path, const std::vector<MetaRecord>& meta) {
  std::ofstream os(path);
  if (!os) throw FormatError("cannot open for writing: " + path);
  for (const auto& m : meta) {
    os << m.identity << ' ' << m.camera;
    if (m.frame && m.fps) os << ' ' << *m.frame << ' ' << *m.fps;
    os << '\n';
  }
  if (!os) throw FormatError("write failed: " + path);
}

inline std::vector<MetaRecord> read_metadata(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw FormatError("cannot open: " + path);
  std::vector<MetaRecord> meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    MetaRecord m;
    std::int64_t frame = 0;
    double fps = 0.0;
    if (!(ls >> m.identity >> m.camera))
      throw FormatError("metadata line " + std::to_string(line_no) + ": expected 'id camera'");
    if (ls >> frame) {
      if (!(ls >> fps))
        throw FormatError("metadata line " + std::to_string(line_no) +
                          ": frame without fps (both or neither)");
      m.frame = frame;
      m.fps = fps;
      m.time = frames_to_seconds(frame, fps);
      m.has_time = true;
    }
    std::string extra;
    if (ls >> extra)
      throw FormatError("metadata line " + std::to_string(line_no) + ": trailing fields");
    meta.push_back(m);
  }
  return meta;
}

/// Feature maps plus optional metadata, validated for consistent counts.
inline GalleryStore load_store(const std::string& maps_path, const std::string& meta_path = "") {
  GalleryStore store;
  store.maps = read_feature_maps(maps_path);
  if (!meta_path.empty()) {
    store.meta = read_metadata(meta_path);
    if (store.meta.size() != store.maps.size())
      throw FormatError("metadata record count (" + std::to_string(store.meta.size()) +
                        ") does not match sample count (" + std::to_string(store.maps.size()) +
                        ")");
  }
  return store;
}

}  // namespace qaconv
