#include "zevi/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "text_io.hpp"
#include "zevi/errors.hpp"

namespace zevi {

namespace {

const char* act_name(Activation a) {
  switch (a) {
    case Activation::kNone:
      return "none";
    case Activation::kLeakyRelu:
      return "leaky_relu";
    case Activation::kTanh:
      return "tanh";
  }
  return "none";
}

Activation act_from(const std::string& s) {
  if (s == "none") return Activation::kNone;
  if (s == "leaky_relu") return Activation::kLeakyRelu;
  if (s == "tanh") return Activation::kTanh;
  throw ParseError("unknown activation tag '" + s + "'");
}

void write_net(std::ostream& out, const char* name, const Mlp& net) {
  out << "net " << name << "\n";
  out << "layers " << net.layers.size() << "\n";
  for (const auto& l : net.layers) {
    out << "dense " << l.in << ' ' << l.out << ' ' << act_name(l.act);
    if (l.act == Activation::kLeakyRelu) out << ' ' << detail::dtos(l.leaky_slope);
    out << "\nweights";
    for (double w : l.weights) out << ' ' << detail::dtos(w);
    out << "\nbias";
    for (double b : l.bias) out << ' ' << detail::dtos(b);
    out << "\n";
  }
}

class TokenReader {
 public:
  explicit TokenReader(std::istream& in) : in_(in) {}

  std::string next() {
    std::string tok;
    if (!(in_ >> tok)) throw ParseError("unexpected end of checkpoint");
    return tok;
  }

  void expect(const std::string& want) {
    std::string got = next();
    if (got != want)
      throw ParseError("expected '" + want + "', got '" + got + "'");
  }

  long integer() { return detail::parse_long(next(), 0); }
  double real() { return detail::parse_double(next(), 0); }

 private:
  std::istream& in_;
};

Mlp read_net(TokenReader& r, const char* name, int dim) {
  r.expect("net");
  r.expect(name);
  r.expect("layers");
  long count = r.integer();
  if (count < 1 || count > 1000) throw ParseError("bad net layer count");
  Mlp net;
  for (long k = 0; k < count; ++k) {
    r.expect("dense");
    DenseLayer l;
    l.in = static_cast<int>(r.integer());
    l.out = static_cast<int>(r.integer());
    if (l.in < 1 || l.out < 1) throw ParseError("bad dense dimensions");
    l.act = act_from(r.next());
    if (l.act == Activation::kLeakyRelu) l.leaky_slope = r.real();
    r.expect("weights");
    l.weights.resize(static_cast<std::size_t>(l.in) * l.out);
    for (auto& w : l.weights) w = r.real();
    r.expect("bias");
    l.bias.resize(l.out);
    for (auto& b : l.bias) b = r.real();
    net.layers.push_back(std::move(l));
  }
  net.validate();
  if (net.input_dim() != dim || net.output_dim() != dim)
    throw ParseError("net dimensions do not match model dim");
  return net;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  validate_flow(ckpt.flow);
  if (ckpt.latent.dim != ckpt.flow.dim)
    throw InvalidInputError("checkpoint: latent dim != flow dim");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidInputError("cannot open checkpoint file: " + path);
  out << "zevi-checkpoint 1\n";
  out << "dim " << ckpt.flow.dim << "\n";
  out << "coupling_layers " << ckpt.flow.layers.size() << "\n";
  out << "mu " << detail::dtos(ckpt.latent.mu) << "\n";
  for (std::size_t k = 0; k < ckpt.flow.layers.size(); ++k) {
    const auto& layer = ckpt.flow.layers[k];
    out << "layer " << k << "\nmask";
    for (auto m : layer.mask) out << ' ' << static_cast<int>(m);
    out << "\n";
    write_net(out, "scale", layer.scale_net);
    write_net(out, "translate", layer.translate_net);
  }
  if (!out) throw InvalidInputError("failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInputError("cannot open checkpoint file: " + path);
  TokenReader r(in);
  r.expect("zevi-checkpoint");
  long version = r.integer();
  if (version != 1)
    throw ParseError("unsupported checkpoint version " +
                     std::to_string(version));
  r.expect("dim");
  long dim = r.integer();
  if (dim < 2 || dim > 1000000) throw ParseError("bad checkpoint dim");
  r.expect("coupling_layers");
  long layers = r.integer();
  if (layers < 1 || layers > 10000) throw ParseError("bad layer count");
  r.expect("mu");
  double mu = r.real();

  Checkpoint ckpt;
  ckpt.flow.dim = static_cast<int>(dim);
  ckpt.latent = LatentModel{mu, static_cast<int>(dim)};
  for (long k = 0; k < layers; ++k) {
    r.expect("layer");
    if (r.integer() != k) throw ParseError("layer indices out of order");
    CouplingLayer layer;
    r.expect("mask");
    layer.mask.resize(dim);
    for (auto& m : layer.mask) {
      long bit = r.integer();
      if (bit != 0 && bit != 1) throw ParseError("mask entries must be 0/1");
      m = static_cast<std::uint8_t>(bit);
    }
    layer.scale_net = read_net(r, "scale", static_cast<int>(dim));
    layer.translate_net = read_net(r, "translate", static_cast<int>(dim));
    ckpt.flow.layers.push_back(std::move(layer));
  }
  validate_flow(ckpt.flow);
  return ckpt;
}

}  // namespace zevi
