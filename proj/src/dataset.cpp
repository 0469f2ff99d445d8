#include "sceneloc/dataset.hpp"

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sceneloc/errors.hpp"

namespace sceneloc {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cannot write " + p.string());
    out << s;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(sep, pos);
        out.push_back(line.substr(pos, next - pos));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    for (auto l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        if (!l.empty()) out.push_back(l);
    }
    return out;
}

void append_pose(std::string& s, const Pose2& p) {
    s += ',' + format_double(p.x) + ',' + format_double(p.y) + ',' + format_double(p.theta);
}

Pose2 pose_at(const std::vector<std::string_view>& cols, std::size_t i) {
    return Pose2{parse_double(cols[i]), parse_double(cols[i + 1]), parse_double(cols[i + 2])};
}

}  // namespace

void save_dataset(const Dataset& ds, const fs::path& dir) {
    fs::create_directories(dir / "scans");
    write_file(dir / "meta", ds.meta.serialize());

    std::string frames = std::string(kFramesHeader) + "\n";
    for (const Frame& f : ds.frames) {
        frames += std::to_string(f.t);
        append_pose(frames, f.u);
        append_pose(frames, f.z);
        append_pose(frames, f.x);
        append_pose(frames, f.gps.value_or(Pose2{}));
        frames += f.gps ? ",1\n" : ",0\n";

        std::string scan = "x,y\n";
        for (const auto& p : f.scan) scan += format_double(p.x()) + ',' + format_double(p.y()) + '\n';
        write_file(dir / "scans" / (std::to_string(f.t) + ".csv"), scan);
    }
    write_file(dir / "frames.csv", frames);
}

Dataset load_dataset(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
    Dataset ds;
    ds.meta = Config::parse(read_file(dir / "meta"));
    Config meta = ds.meta;
    try {
        ds.sim = sim_config_from(meta);
    } catch (const InvalidArgument& e) {
        throw DataError(std::string("dataset meta: ") + e.what());
    }
    ds.start = Pose2{parse_double(ds.meta.require("start.x")), parse_double(ds.meta.require("start.y")),
                     parse_double(ds.meta.require("start.theta"))};

    const std::string text = read_file(dir / "frames.csv");
    const auto lines = lines_of(text);
    if (lines.empty() || lines.front() != kFramesHeader) throw DataError("frames.csv: bad header");
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cols = split(lines[i], ',');
        if (cols.size() != 14) throw DataError("frames.csv line " + std::to_string(i + 1) + ": expected 14 columns");
        Frame f;
        f.t = static_cast<int>(parse_double(cols[0]));
        if (f.t != static_cast<int>(i - 1)) throw DataError("frames.csv: frame indices must be 0, 1, 2, ...");
        f.u = pose_at(cols, 1);
        f.z = pose_at(cols, 4);
        f.x = pose_at(cols, 7);
        if (cols[13] == "1") {
            f.gps = pose_at(cols, 10);
        } else if (cols[13] != "0") {
            throw DataError("frames.csv: has_gps must be 0 or 1");
        }

        const std::string scan = read_file(dir / "scans" / (std::to_string(f.t) + ".csv"));
        const auto rows = lines_of(scan);
        if (rows.empty() || rows.front() != "x,y") throw DataError("scan " + std::to_string(f.t) + ": bad header");
        f.scan.reserve(rows.size() - 1);
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto xy = split(rows[r], ',');
            if (xy.size() != 2) throw DataError("scan " + std::to_string(f.t) + ": expected x,y");
            f.scan.emplace_back(parse_double(xy[0]), parse_double(xy[1]));
        }
        ds.frames.push_back(std::move(f));
    }
    return ds;
}

}  // namespace sceneloc
