#include <charconv>
#include <type_traits>

#include "locosel/nnet.hpp"

namespace locosel {

const char* to_string(HeadKind kind) { return kind == HeadKind::Sigmoid ? "sigmoid" : "linear"; }

HeadKind parse_head_kind(const std::string& text) {
  if (text == "sigmoid" || text == "viability") return HeadKind::Sigmoid;
  if (text == "linear" || text == "cot") return HeadKind::Linear;
  throw Error(Errc::Usage, "unknown head kind '" + text + "'");
}

HeadKind head_kind_for(DatasetKind kind) {
  return kind == DatasetKind::Viability ? HeadKind::Sigmoid : HeadKind::Linear;
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(Errc::ConfigInvalid, "learning_rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw Error(Errc::ConfigInvalid, "momentum must lie in [0, 1)");
  if (batch_size < 1) throw Error(Errc::ConfigInvalid, "batch_size must be >= 1");
}

std::string history_csv(const std::vector<EpochStats>& history) {
  std::string out = "epoch,train_mse,test_mse\n";
  for (const auto& e : history)
    out += std::to_string(e.epoch) + "," + format_number(e.train_mse) + "," +
           format_number(e.test_mse) + "\n";
  return out;
}

namespace {

template <typename Scalar>
const char* scalar_name() {
  return std::is_same_v<Scalar, float> ? "float32" : "float64";
}

constexpr const char* kLayerDims =
    "conv1=4x1x3x3,conv2=8x4x3x3,conv3=8x8x3x3,fc1=128x600,fc2=128x128,head=1x128";

template <typename Scalar>
Scalar parse_scalar(std::string_view token) {
  token = trim(token);
  Scalar v{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || token.empty())
    throw Error(Errc::MalformedFile, "not a number: '" + std::string(token) + "'");
  return v;
}

}  // namespace

template <typename Scalar>
std::string serialize_model(const CnnModel<Scalar>& model) {
  std::string out = "# format_version=" + std::to_string(kModelFormatVersion) +
                    ",head_kind=" + to_string(model.head_kind) +
                    ",scalar=" + scalar_name<Scalar>() + "," + kLayerDims + "\n";
  model.for_each([&](const char* name, const auto& t) {
    out += name;
    out += ',' + std::to_string(t.size());
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) out += ',' + format_number(t(i, j));
    out += '\n';
  });
  return out;
}

template <typename Scalar>
CnnModel<Scalar> parse_model(std::string_view text) {
  auto lines = split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty() || lines[0].substr(0, 1) != "#")
    throw Error(Errc::MalformedFile, "model file lacks a '#' header");

  KeyValueConfig header;
  for (auto field : split(trim(lines[0].substr(1)), ',')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::MalformedFile, "header field '" + std::string(field) + "' lacks '='");
    header.set(std::string(trim(field.substr(0, eq))), std::string(trim(field.substr(eq + 1))));
  }
  CnnModel<Scalar> model;
  try {
    const long long version = header.get_int("format_version");
    if (version != kModelFormatVersion)
      throw Error(Errc::VersionMismatch, "model format_version expected " +
                                             std::to_string(kModelFormatVersion) + ", found " +
                                             std::to_string(version));
    if (header.get_string("scalar") != scalar_name<Scalar>())
      throw Error(Errc::MalformedFile, "model scalar is " + header.get_string("scalar") +
                                           ", expected " + scalar_name<Scalar>());
    model.head_kind = parse_head_kind(header.get_string("head_kind"));
    for (auto field : split(kLayerDims, ',')) {
      const auto eq = field.find('=');
      const std::string layer(field.substr(0, eq));
      if (header.get_string(layer) != field.substr(eq + 1))
        throw Error(Errc::MalformedFile, "layer " + layer + " has dims " +
                                             header.get_string(layer) + ", expected " +
                                             std::string(field.substr(eq + 1)));
    }
  } catch (const Error& e) {
    if (e.code() == Errc::VersionMismatch || e.code() == Errc::MalformedFile) throw;
    throw Error(Errc::MalformedFile, e.what());
  }

  std::size_t line = 1;
  model.for_each([&](const char* name, auto& t) {
    if (line >= lines.size())
      throw Error(Errc::MalformedFile, std::string("missing record for ") + name);
    const auto fields = split(lines[line], ',');
    const std::string where = "line " + std::to_string(line + 1);
    ++line;
    if (fields.size() < 2 || trim(fields[0]) != name)
      throw Error(Errc::MalformedFile, where + ": expected record '" + name + "'");
    long long declared = 0;
    try {
      declared = parse_int(fields[1]);
    } catch (const Error&) {
      throw Error(Errc::MalformedFile, where + ": corrupted length field");
    }
    if (declared != t.size() || fields.size() != static_cast<std::size_t>(t.size()) + 2)
      throw Error(Errc::MalformedFile, where + ": " + name + " declares " +
                                           std::to_string(declared) + " values, expected " +
                                           std::to_string(t.size()) + ", found " +
                                           std::to_string(fields.size() - 2));
    std::size_t k = 2;
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j) {
        try {
          t(i, j) = parse_scalar<Scalar>(fields[k++]);
        } catch (const Error& e) {
          throw Error(Errc::MalformedFile, where + ": " + e.what());
        }
      }
  });
  if (line != lines.size()) throw Error(Errc::MalformedFile, "trailing records after head.bias");
  return model;
}

template <typename Scalar>
void save_model(const CnnModel<Scalar>& model, const std::string& path) {
  write_file(path, serialize_model(model));
}

template <typename Scalar>
CnnModel<Scalar> load_model(const std::string& path) {
  return parse_model<Scalar>(read_file(path));
}

template std::string serialize_model<float>(const CnnModel<float>&);
template std::string serialize_model<double>(const CnnModel<double>&);
template CnnModel<float> parse_model<float>(std::string_view);
template CnnModel<double> parse_model<double>(std::string_view);
template void save_model<float>(const CnnModel<float>&, const std::string&);
template void save_model<double>(const CnnModel<double>&, const std::string&);
template CnnModel<float> load_model<float>(const std::string&);
template CnnModel<double> load_model<double>(const std::string&);

}  // namespace locosel
