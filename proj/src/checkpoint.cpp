#include "gpd/nn/checkpoint.hpp"

#include <fstream>

#include "gpd/binary_io.hpp"
#include "gpd/io.hpp"

namespace gpd::nn {
namespace {

using namespace gpd::binio;

constexpr char kMagic[4] = {'G', 'P', 'D', 'N'};

enum KindTag : std::uint8_t { kConv = 0, kRelu = 1, kPool = 2, kDense = 3 };

void write_stack(std::ostream& out, const LayerStack<float>& stack) {
  put_u32(out, static_cast<std::uint32_t>(stack.size()));
  for (const auto& layer : stack) {
    if (auto* c = std::get_if<Conv2d<float>>(&layer)) {
      put_u8(out, kConv);
      put_u32(out, 4);
      for (int d : {c->out_ch, c->in_ch, c->kh, c->kw}) put_u32(out, static_cast<std::uint32_t>(d));
      put_floats(out, c->weight);
      put_floats(out, c->bias);
    } else if (auto* d = std::get_if<Dense<float>>(&layer)) {
      put_u8(out, kDense);
      put_u32(out, 2);
      put_u32(out, static_cast<std::uint32_t>(d->out_features));
      put_u32(out, static_cast<std::uint32_t>(d->in_features));
      put_floats(out, d->weight);
      put_floats(out, d->bias);
    } else {
      put_u8(out, std::holds_alternative<Relu>(layer) ? kRelu : kPool);
      put_u32(out, 0);
    }
  }
}

int get_dim(std::istream& in) {
  const std::uint32_t d = get_u32(in);
  if (d == 0 || d > (1u << 24)) throw FormatError("implausible layer dimension " + std::to_string(d));
  return static_cast<int>(d);
}

LayerStack<float> read_stack(std::istream& in) {
  const std::uint32_t n = get_u32(in);
  if (n > 4096) throw FormatError("implausible layer count");
  LayerStack<float> stack;
  for (std::uint32_t i = 0; i < n; ++i) {
    const std::uint8_t kind = get_u8(in);
    const std::uint32_t rank = get_u32(in);
    switch (kind) {
      case kConv: {
        if (rank != 4) throw FormatError("conv layer record must have rank 4");
        const int out = get_dim(in), inc = get_dim(in), kh = get_dim(in), kw = get_dim(in);
        Conv2d<float> c(inc, out, kh, kw);
        c.weight = get_floats(in, c.weight.size());
        c.bias = get_floats(in, c.bias.size());
        stack.push_back(std::move(c));
        break;
      }
      case kDense: {
        if (rank != 2) throw FormatError("fully connected layer record must have rank 2");
        const int out = get_dim(in), inf = get_dim(in);
        Dense<float> d(inf, out);
        d.weight = get_floats(in, d.weight.size());
        d.bias = get_floats(in, d.bias.size());
        stack.push_back(std::move(d));
        break;
      }
      case kRelu:
      case kPool:
        if (rank != 0) throw FormatError("parameter-free layer record must have rank 0");
        if (kind == kRelu) stack.push_back(Relu{}); else stack.push_back(MaxPool2{});
        break;
      default:
        throw FormatError("unknown layer kind tag " + std::to_string(kind));
    }
  }
  return stack;
}

}  // namespace

void write_checkpoint(std::ostream& out, const Network<float>& net) {
  out.write(kMagic, 4);
  put_u32(out, kCheckpointVersion);
  std::size_t layers = net.head.size();
  for (const auto& b : net.branches) layers += b.size();
  put_u32(out, static_cast<std::uint32_t>(layers));
  put_string(out, net.arch);
  put_u8(out, net.fully_convolutional ? 1 : 0);
  put_u32(out, static_cast<std::uint32_t>(net.input_shapes.size()));
  for (const Shape& s : net.input_shapes) {
    put_u32(out, static_cast<std::uint32_t>(s.c));
    put_u32(out, static_cast<std::uint32_t>(s.h));
    put_u32(out, static_cast<std::uint32_t>(s.w));
  }
  put_u32(out, static_cast<std::uint32_t>(net.branches.size() + 1));
  for (const auto& b : net.branches) write_stack(out, b);
  write_stack(out, net.head);
}

Network<float> read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string_view(magic, 4) != std::string_view(kMagic, 4)) {
    throw FormatError("not a network checkpoint (bad magic)");
  }
  const std::uint32_t version = get_u32(in);
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const std::uint32_t layers = get_u32(in);
  Network<float> net;
  net.arch = get_string(in);
  net.fully_convolutional = get_u8(in) != 0;
  const std::uint32_t inputs = get_u32(in);
  if (inputs == 0 || inputs > 64) throw FormatError("implausible input count");
  for (std::uint32_t i = 0; i < inputs; ++i) {
    const int c = get_dim(in), h = get_dim(in), w = get_dim(in);
    net.input_shapes.push_back(Shape{c, h, w});
  }
  const std::uint32_t stacks = get_u32(in);
  if (stacks != inputs + 1) throw FormatError("stack count does not match input count");
  for (std::uint32_t b = 0; b < inputs; ++b) net.branches.push_back(read_stack(in));
  net.head = read_stack(in);
  std::size_t total = net.head.size();
  for (const auto& b : net.branches) total += b.size();
  if (total != layers) throw FormatError("layer count in header does not match records");
  net.output_shape();  // validates the stack
  return net;
}

void save_checkpoint(const Network<float>& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open for writing: " + path.string());
  write_checkpoint(out, net);
  if (!out) throw InputError("write failed: " + path.string());
}

Network<float> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("checkpoint not found: " + path.string());
  try {
    return read_checkpoint(in);
  } catch (const FormatError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace gpd::nn
