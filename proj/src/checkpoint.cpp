#include "sthcss/checkpoint.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sthcss/matrix_io.hpp"

namespace sthcss {

namespace {

constexpr char kMagic[] = "STHCSS1";

std::string header_to_text(const CheckpointHeader& h) {
  std::ostringstream os;
  os << "sensors=" << h.model.sensors << '\n';
  os << "window=" << h.model.window << '\n';
  os << "mixer_blocks=" << h.model.mixer_blocks << '\n';
  os << "kernel_size=" << h.model.kernel_size << '\n';
  os << "dilation=" << h.model.dilation << '\n';
  os << "st_blocks=" << h.model.st_blocks << '\n';
  os << "channels=" << h.model.channels << '\n';
  os << "dropout=" << format_double(h.model.dropout_p) << '\n';
  os << "readout_hidden=" << h.model.readout_hidden << '\n';
  os << "knn_k=" << h.knn_k << '\n';
  os << "weighted_degrees=" << (h.weighted_degrees ? 1 : 0) << '\n';
  os << "target=" << h.target_name << '\n';
  os << "seed=" << h.seed << '\n';
  return os.str();
}

std::size_t parse_size(const std::string& value, const std::string& key,
                       const std::filesystem::path& path) {
  std::size_t out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw FormatError("checkpoint " + path.string() + ": bad value for " + key);
  }
  return out;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const CheckpointHeader& header,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");

  out << kMagic << '\n';
  out << header_to_text(header);
  out << "params=" << params.tensor_count() << '\n';
  for (const auto& e : params.entries()) {
    out << e.name << ' ' << e.tensor.ndim();
    for (std::size_t d : e.tensor.shape()) out << ' ' << d;
    out << '\n';
    out.write(reinterpret_cast<const char*>(e.tensor.data().data()),
              static_cast<std::streamsize>(e.tensor.size() * sizeof(double)));
    out << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line) || line != kMagic) {
    throw FormatError("checkpoint " + path.string() + ": bad magic (expected " + kMagic + ")");
  }

  CheckpointHeader h;
  std::size_t declared_params = 0;
  bool saw_params = false;
  while (std::getline(in, line)) {
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("checkpoint " + path.string() + ": malformed header line '" + line +
                        "'");
    }
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "sensors") h.model.sensors = parse_size(value, key, path);
    else if (key == "window") h.model.window = parse_size(value, key, path);
    else if (key == "mixer_blocks") h.model.mixer_blocks = parse_size(value, key, path);
    else if (key == "kernel_size") h.model.kernel_size = parse_size(value, key, path);
    else if (key == "dilation") h.model.dilation = parse_size(value, key, path);
    else if (key == "st_blocks") h.model.st_blocks = parse_size(value, key, path);
    else if (key == "channels") h.model.channels = parse_size(value, key, path);
    else if (key == "dropout") h.model.dropout_p = std::stod(value);
    else if (key == "readout_hidden") h.model.readout_hidden = parse_size(value, key, path);
    else if (key == "knn_k") h.knn_k = parse_size(value, key, path);
    else if (key == "weighted_degrees") h.weighted_degrees = value == "1";
    else if (key == "target") h.target_name = value;
    else if (key == "seed") h.seed = parse_size(value, key, path);
    else if (key == "params") {
      declared_params = parse_size(value, key, path);
      saw_params = true;
      break;
    } else {
      throw FormatError("checkpoint " + path.string() + ": unknown header key '" + key + "'");
    }
  }
  if (!saw_params) {
    throw FormatError("checkpoint " + path.string() + ": missing params section");
  }

  ModelParams params = ModelParams::zeros(h.model);
  if (declared_params != params.tensor_count()) {
    throw FormatError("checkpoint " + path.string() + ": declares " +
                      std::to_string(declared_params) + " parameters, config implies " +
                      std::to_string(params.tensor_count()));
  }

  for (std::size_t i = 0; i < declared_params; ++i) {
    if (!std::getline(in, line)) {
      throw FormatError("checkpoint " + path.string() + ": truncated at parameter " +
                        std::to_string(i));
    }
    std::istringstream rec(line);
    std::string name;
    std::size_t ndim = 0;
    rec >> name >> ndim;
    if (rec.fail()) {
      throw FormatError("checkpoint " + path.string() + ": bad record header '" + line + "'");
    }
    std::vector<std::size_t> shape(ndim);
    for (auto& d : shape) rec >> d;
    if (rec.fail()) {
      throw FormatError("checkpoint " + path.string() + ": bad shape for '" + name + "'");
    }
    Tensor& target = params.at(name);
    if (target.shape() != shape) {
      throw FormatError("checkpoint " + path.string() + ": parameter '" + name +
                        "' has unexpected shape");
    }
    in.read(reinterpret_cast<char*>(target.data().data()),
            static_cast<std::streamsize>(target.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(target.size() * sizeof(double))) {
      throw FormatError("checkpoint " + path.string() + ": truncated data for '" + name + "'");
    }
    char nl = 0;
    in.read(&nl, 1);
    if (nl != '\n') {
      throw FormatError("checkpoint " + path.string() + ": bad record terminator after '" +
                        name + "'");
    }
  }
  return Checkpoint{h, std::move(params)};
}

}  // namespace sthcss
