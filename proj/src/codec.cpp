#include "km3d/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include "km3d/error.hpp"
#include "km3d/grm.hpp"

namespace km3d::codec {

HeadMaps HeadMaps::zeros(int height, int width, int num_classes) {
  HeadMaps m;
  m.main_center = Tensor3(height, width, num_classes);
  m.kp_offsets = Tensor3(height, width, 2 * kNumKeypoints);
  m.dim_residual = Tensor3(height, width, 3);
  m.orient = Tensor3(height, width, kOrientationChannels);
  m.conf3d = Tensor3(height, width, 1);
  return m;
}

void HeadMaps::validate() const {
  const int h = main_center.height();
  const int w = main_center.width();
  auto check = [&](const Tensor3& t, int channels, const char* name) {
    if (t.height() != h || t.width() != w || t.channels() != channels) {
      throw Error(ErrorCode::ShapeMismatch, std::string(name) + " does not match the main-center extent");
    }
  };
  if (main_center.channels() < 1) throw Error(ErrorCode::ShapeMismatch, "main_center has no class channels");
  check(kp_offsets, 2 * kNumKeypoints, "kp_offsets");
  check(dim_residual, 3, "dim_residual");
  check(orient, kOrientationChannels, "orient");
  check(conf3d, 1, "conf3d");
  if (stride <= 0) throw Error(ErrorCode::ShapeMismatch, "stride must be positive");
}

Dimension3D decode_dimension(const Vec3& delta) {
  return {kDimensionPrior.h * std::exp(delta.x()), kDimensionPrior.w * std::exp(delta.y()),
          kDimensionPrior.l * std::exp(delta.z())};
}

Vec3 encode_dimension(const Dimension3D& dim) {
  if (!dim.valid()) throw Error(ErrorCode::InvalidDimension, "dimensions must be positive");
  return {std::log(dim.h / kDimensionPrior.h), std::log(dim.w / kDimensionPrior.w),
          std::log(dim.l / kDimensionPrior.l)};
}

bool in_bin(int bin, double alpha) {
  constexpr double pi = std::numbers::pi;
  alpha = normalize_angle(alpha);
  if (bin == 0) return alpha <= pi / 6.0 || alpha >= 5.0 * pi / 6.0;
  return alpha >= -pi / 6.0 || alpha <= -5.0 * pi / 6.0;
}

OrientationVector encode_orientation(double alpha) {
  OrientationVector v{};
  for (int bin = 0; bin < 2; ++bin) {
    const int base = 4 * bin;
    const bool member = in_bin(bin, alpha);
    v[base + 0] = member ? 0.0 : kSaturatedLogit;
    v[base + 1] = member ? kSaturatedLogit : 0.0;
    const double residual = normalize_angle(alpha - kBinCenters[bin]);
    v[base + 2] = std::sin(residual);
    v[base + 3] = std::cos(residual);
  }
  return v;
}

double decode_orientation(const OrientationVector& v) {
  // Softmax in-bin probability is monotone in the logit difference.
  const double score0 = v[1] - v[0];
  const double score1 = v[5] - v[4];
  const int bin = score1 > score0 ? 1 : 0;
  const int base = 4 * bin;
  return normalize_angle(kBinCenters[bin] + std::atan2(v[base + 2], v[base + 3]));
}

std::vector<Peak> extract_peaks(const Tensor3& main_center, double threshold) {
  std::vector<Peak> peaks;
  const int H = main_center.height();
  const int W = main_center.width();
  for (int c = 0; c < main_center.channels(); ++c) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const double v = main_center.at(y, x, c);
        if (!(v >= threshold)) continue;
        bool peak = true;
        for (int dy = -1; dy <= 1 && peak; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = y + dy;
            const int nx = x + dx;
            if ((dy == 0 && dx == 0) || ny < 0 || ny >= H || nx < 0 || nx >= W) continue;
            const double n = main_center.at(ny, nx, c);
            const bool earlier = dy < 0 || (dy == 0 && dx < 0);
            if (n > v || (n == v && earlier)) {
              peak = false;
              break;
            }
          }
        }
        if (peak) peaks.push_back({c, y, x, v});
      }
    }
  }
  std::stable_sort(peaks.begin(), peaks.end(), [](const Peak& a, const Peak& b) { return a.score > b.score; });
  return peaks;
}

std::vector<Prediction> decode_objects(const HeadMaps& maps, const CameraModel& cam, const DecodeOptions& options) {
  maps.validate();
  std::vector<Peak> peaks = extract_peaks(maps.main_center, options.threshold);
  if (options.top_k > 0 && peaks.size() > options.top_k) peaks.resize(options.top_k);

  const double stride = maps.stride;
  std::vector<Prediction> out;
  out.reserve(peaks.size());
  for (const Peak& p : peaks) {
    Prediction pred;
    pred.class_id = p.class_id;
    pred.center = Vec2(p.x, p.y) * stride;
    pred.score2d = p.score;
    for (int i = 0; i < kNumKeypoints; ++i) {
      pred.kps.pts[i] = stride * Vec2(p.x + maps.kp_offsets.at(p.y, p.x, 2 * i),
                                      p.y + maps.kp_offsets.at(p.y, p.x, 2 * i + 1));
    }
    pred.dim = decode_dimension(Vec3(maps.dim_residual.at(p.y, p.x, 0), maps.dim_residual.at(p.y, p.x, 1),
                                     maps.dim_residual.at(p.y, p.x, 2)));
    OrientationVector ov{};
    for (int k = 0; k < kOrientationChannels; ++k) ov[k] = maps.orient.at(p.y, p.x, k);
    pred.alpha = decode_orientation(ov);
    pred.conf3d = maps.conf3d.at(p.y, p.x, 0);
    pred.fused = pred.score2d * pred.conf3d;
    if (options.run_grm) {
      const double theta = alpha_to_theta(pred.alpha, pred.kps.pts[kCenterKeypoint], cam);
      pred.theta = theta;
      try {
        pred.T = grm::solve_full(pred.kps, pred.dim, theta, cam).T;
      } catch (const Error&) {
        pred.T.reset();
      }
    }
    out.push_back(std::move(pred));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binary container

namespace {

constexpr char kMagic[8] = {'K', 'M', '3', 'D', 'H', 'M', 'A', 'P'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& os, T v) {
  v = to_little(v);
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) {
    throw Error(ErrorCode::BadFormat, "unexpected end of head-map stream");
  }
  return to_little(v);
}

void put_tensor(std::ostream& os, const std::string& label, const Tensor3& t) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(label.size()));
  os.write(label.data(), static_cast<std::streamsize>(label.size()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.height()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.width()));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(t.channels()));
  for (double v : t.data()) put<double>(os, v);
}

}  // namespace

void write_head_maps(std::ostream& os, const HeadMaps& maps) {
  maps.validate();
  os.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(os, kVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(maps.stride));
  put<std::uint32_t>(os, 5);
  put_tensor(os, "main_center", maps.main_center);
  put_tensor(os, "kp_offsets", maps.kp_offsets);
  put_tensor(os, "dim_residual", maps.dim_residual);
  put_tensor(os, "orient", maps.orient);
  put_tensor(os, "conf3d", maps.conf3d);
  if (!os) throw Error(ErrorCode::Io, "failed writing head-map stream");
}

HeadMaps read_head_maps(std::istream& is) {
  char magic[sizeof(kMagic)];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::BadFormat, "missing KM3DHMAP magic");
  }
  const auto version = get<std::uint32_t>(is);
  if (version != kVersion) throw Error(ErrorCode::BadFormat, "unsupported version " + std::to_string(version));
  HeadMaps maps;
  maps.stride = static_cast<int>(get<std::uint32_t>(is));
  const auto count = get<std::uint32_t>(is);
  std::map<std::string, Tensor3> tensors;
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = get<std::uint32_t>(is);
    if (len > 256) throw Error(ErrorCode::BadFormat, "channel label too long");
    std::string label(len, '\0');
    if (!is.read(label.data(), len)) throw Error(ErrorCode::BadFormat, "truncated label");
    const auto h = get<std::uint32_t>(is);
    const auto w = get<std::uint32_t>(is);
    const auto c = get<std::uint32_t>(is);
    if (static_cast<std::uint64_t>(h) * w * c > (std::uint64_t{1} << 32)) {
      throw Error(ErrorCode::BadFormat, "tensor '" + label + "' is implausibly large");
    }
    Tensor3 t(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
    for (double& v : t.data()) v = get<double>(is);
    tensors[label] = std::move(t);
  }
  auto take = [&](const char* name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw Error(ErrorCode::BadFormat, std::string("missing tensor '") + name + "'");
    return std::move(it->second);
  };
  maps.main_center = take("main_center");
  maps.kp_offsets = take("kp_offsets");
  maps.dim_residual = take("dim_residual");
  maps.orient = take("orient");
  maps.conf3d = take("conf3d");
  maps.validate();
  return maps;
}

void save_head_maps(const std::string& path, const HeadMaps& maps) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::Io, "cannot open " + path + " for writing");
  write_head_maps(os, maps);
}

HeadMaps load_head_maps(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::Io, "cannot open " + path);
  return read_head_maps(is);
}

}  // namespace km3d::codec
