#include "spde/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace spde {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "time";
    const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().size();
    for (Eigen::Index j = 0; j < n; ++j) out << ",x_" << j;
    out << "\n";
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out << format_double(traj.times[i]);
        for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_double(traj.states[i][j]);
        out << "\n";
    }
    if (!out) throw IoError("failed while writing " + path);
}

namespace {
constexpr char kTrajMagic[8] = {'S', 'P', 'D', 'E', 'T', 'R', 'A', 'J'};
constexpr std::uint32_t kTrajVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void get(std::ifstream& in, T& v) {
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void write_trajectory_binary(const std::string& path, const Trajectory& traj) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write(kTrajMagic, sizeof(kTrajMagic));
    put(out, kTrajVersion);
    const std::uint32_t n_nodes =
        traj.states.empty() ? 0u : static_cast<std::uint32_t>(traj.states.front().size());
    const std::uint32_t n_modes =
        traj.mode_states.empty() ? 0u : static_cast<std::uint32_t>(traj.mode_states.front().size());
    put(out, n_nodes);
    put(out, n_modes);
    put(out, traj.noise_provenance.dt);
    const double T = traj.times.empty() ? 0.0 : traj.times.back();
    put(out, T);
    put(out, traj.noise_provenance.seed);
    put(out, static_cast<std::uint32_t>(traj.times.size()));
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        put(out, traj.times[i]);
        out.write(reinterpret_cast<const char*>(traj.states[i].data()),
                  static_cast<std::streamsize>(sizeof(double) * n_nodes));
    }
    if (!out) throw IoError("failed while writing " + path);
}

Trajectory read_trajectory_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kTrajMagic, sizeof(magic)) != 0)
        throw IoError(path + ": not a trajectory file");
    std::uint32_t version = 0, n_nodes = 0, n_modes = 0, n_records = 0;
    get(in, version);
    if (version != kTrajVersion) throw IoError(path + ": unsupported version");
    get(in, n_nodes);
    get(in, n_modes);
    Trajectory traj;
    get(in, traj.noise_provenance.dt);
    double T = 0.0;
    get(in, T);
    get(in, traj.noise_provenance.seed);
    get(in, n_records);
    for (std::uint32_t i = 0; i < n_records; ++i) {
        double t = 0.0;
        get(in, t);
        Field x(n_nodes);
        in.read(reinterpret_cast<char*>(x.data()),
                static_cast<std::streamsize>(sizeof(double) * n_nodes));
        traj.times.push_back(t);
        traj.states.push_back(std::move(x));
    }
    if (!in) throw IoError(path + ": truncated trajectory file");
    return traj;
}

void append_result_row(const std::string& path, const std::string& experiment_id,
                       const std::string& op_name, const std::string& params_digest,
                       double mean, double stderr_of_mean, std::int64_t n, std::uint64_t seed,
                       double wall_time) {
    const bool fresh = !std::ifstream(path).good();
    std::ofstream out(path, std::ios::app);
    if (!out) throw IoError("cannot append to " + path);
    if (fresh) out << "experiment_id,op,params_digest,mean,stderr,n,seed,wall_time\n";
    out << experiment_id << ',' << op_name << ',' << params_digest << ','
        << format_double(mean) << ',' << format_double(stderr_of_mean) << ',' << n << ',' << seed
        << ',' << format_double(wall_time) << "\n";
    if (!out) throw IoError("failed while appending to " + path);
}

void write_curves_csv(const std::string& path, const std::vector<CurvePoint>& points) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << "curve,x,y\n";
    for (const auto& p : points)
        out << p.curve << ',' << format_double(p.x) << ',' << format_double(p.y) << "\n";
    if (!out) throw IoError("failed while writing " + path);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("failed while writing " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string strip_wall_time_column(const std::string& csv) {
    std::string out;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t comma = line.rfind(',');
        out += (comma == std::string::npos) ? line : line.substr(0, comma);
        out += '\n';
    }
    return out;
}

}  // namespace spde
