// mvkit - moveability analysis for the planar five-bar parallel manipulator.
//
// Subcommands: validate, map, aspects, check-path, moveability. All commands
// except validate read the project configuration given with --config.
#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mvkit/config.hpp"
#include "mvkit/moveability.hpp"
#include "mvkit/serialize.hpp"
#include "mvkit/svg_render.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mvkit;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;   // infeasible / validation failure
constexpr int kExitUsage = 2;

constexpr double kRadToDeg = 57.29577951308232;

struct CacheDirLock {
    // Advisory lock file; writers wait briefly, then proceed without caching.
    fs::path lock_path;
    int fd = -1;

    explicit CacheDirLock(const fs::path& dir) : lock_path(dir / ".lock") {
        for (int attempt = 0; attempt < 50; ++attempt) {
            fd = ::open(lock_path.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd >= 0) return;
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
    }
    bool held() const { return fd >= 0; }
    ~CacheDirLock() {
        if (fd >= 0) {
            ::close(fd);
            std::error_code ec;
            fs::remove(lock_path, ec);
        }
    }
};

fs::path cache_dir(const ProjectConfig& cfg) {
    if (const char* env = std::getenv("MVKIT_CACHE")) return fs::path(env);
    return fs::path(cfg.output_dir) / "cache";
}

int parse_sign(const std::string& s) {
    if (s == "+" || s == "+1" || s == "1") return +1;
    if (s == "-" || s == "-1") return -1;
    throw CLI::ValidationError("--sign", "sign must be '+' or '-'");
}

AspectMap build_or_load_map(const ProjectConfig& cfg, SpaceKind space, int mode_index, int sign,
                            double min_cell_override, bool quiet) {
    BuildParams params = cfg.build_params(space);
    if (min_cell_override > 0)
        params.min_cell = snap_min_cell(params.bounds->size, min_cell_override);
    const WorkingMode mode = WorkingMode::from_index(mode_index);

    const std::string key = decomposition_cache_key(
        cfg.geometry, cfg.obstacles, space, mode, sign, *params.bounds, params.min_cell,
        params.samples_per_cell);
    const fs::path dir = cache_dir(cfg);
    const fs::path entry = dir / (key + ".json");

    if (fs::exists(entry)) {
        try {
            AspectMap map;
            map.tree = load_quadtree(entry.string());
            map.aspects = extract_aspects(map.tree);
            map.aspect_of_cell.assign((size_t)map.tree.grid_dim * map.tree.grid_dim, -1);
            for (size_t i = 0; i < map.aspects.size(); ++i)
                for (const GridCell& cell : map.aspects[i].cells)
                    map.aspect_of_cell[(size_t)cell.second * map.tree.grid_dim + cell.first] =
                        (int32_t)i;
            if (!quiet)
                std::fprintf(stderr, "loaded cached decomposition %s\n", key.c_str());
            return map;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "warning: discarding unreadable cache entry %s: %s\n",
                         entry.string().c_str(), e.what());
        }
    }

    AspectMap map = build_aspect_map(cfg.geometry, space, mode, sign, cfg.obstacles, params);

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!ec) {
        CacheDirLock lock(dir);
        if (lock.held()) {
            try {
                save_quadtree(map.tree, entry.string());
            } catch (const std::exception& e) {
                std::fprintf(stderr, "warning: could not write cache entry: %s\n", e.what());
            }
        }
    }
    return map;
}

void print_config_error(const ConfigError& e) {
    if (e.field().empty())
        std::fprintf(stderr, "error[%s]: %s\n", e.code().c_str(), e.what());
    else
        std::fprintf(stderr, "error[%s] (%s): %s\n", e.code().c_str(), e.field().c_str(),
                     e.what());
}

std::pair<double, double> parse_xy(const std::string& s) {
    const auto comma = s.find(',');
    if (comma == std::string::npos)
        throw CLI::ValidationError("point", "expected X,Y");
    try {
        return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("point", "expected numeric X,Y");
    }
}

json aspect_summary(const AspectMap& map, bool joint_space) {
    json arr = json::array();
    const double unit = joint_space ? kRadToDeg * kRadToDeg : 1.0;
    for (const FreeAspect& a : map.aspects) {
        arr.push_back(json{{"id", a.id.str()},
                           {"index", a.id.index},
                           {"cells", a.cells.size()},
                           {"area", a.area * unit}});
    }
    return arr;
}

int cmd_validate(const std::string& path) {
    try {
        const ProjectConfig cfg = load_project_config(path);
        cfg.geometry.validate();
        std::printf("OK: L=(%.6g, %.6g, %.6g, %.6g, %.6g), radii=(%.6g, %.6g, %.6g), "
                    "obstacles=%zu, output='%s'\n",
                    cfg.geometry.L0, cfg.geometry.L1, cfg.geometry.L2, cfg.geometry.L3,
                    cfg.geometry.L4, cfg.geometry.link_radius, cfg.geometry.base_radius,
                    cfg.geometry.platform_radius, cfg.obstacles.size(),
                    cfg.output_dir.c_str());
        return kExitOk;
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error[BAD-FIELD]: %s\n", e.what());
        return kExitFailure;
    }
}

int cmd_map(const ProjectConfig& cfg, const std::string& space_arg, int mode, int sign,
            double min_cell, const std::string& out_path) {
    const SpaceKind space = space_arg == "w" ? SpaceKind::Workspace : SpaceKind::JointSpace;
    const AspectMap map = build_or_load_map(cfg, space, mode, sign, min_cell, false);

    const std::string svg = render_map_svg(map, cfg.obstacles, RenderStyle::defaults());
    {
        std::ofstream f(out_path, std::ios::binary);
        if (!f) {
            std::fprintf(stderr, "error: cannot open '%s' for writing\n", out_path.c_str());
            return kExitFailure;
        }
        f << svg;
        if (!f) {
            std::fprintf(stderr, "error: write failed for '%s'\n", out_path.c_str());
            return kExitFailure;
        }
    }
    fs::path tree_path(out_path);
    tree_path.replace_extension(".json");
    try {
        save_quadtree(map.tree, tree_path.string());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }

    std::printf("wrote %s and %s\n", out_path.c_str(), tree_path.string().c_str());
    std::printf("space=%s mode=%d sign=%s min_cell=%.8g grid=%d aspects=%zu\n",
                space_arg.c_str(), mode, sign > 0 ? "+" : "-", map.tree.min_cell,
                map.tree.grid_dim, map.aspects.size());
    for (const FreeAspect& a : map.aspects)
        std::printf("  aspect %-8s cells=%-7zu area=%.6g\n", a.id.str().c_str(),
                    a.cells.size(), a.area);
    return kExitOk;
}

int cmd_aspects(const ProjectConfig& cfg, const std::string& space_arg,
                const std::string& format, double min_cell) {
    const SpaceKind space = space_arg == "w" ? SpaceKind::Workspace : SpaceKind::JointSpace;
    const bool joint_space = space == SpaceKind::JointSpace;
    json out = json::array();
    for (int mode = 1; mode <= 4; ++mode) {
        for (int sign : {+1, -1}) {
            const AspectMap map = build_or_load_map(cfg, space, mode, sign, min_cell, true);
            out.push_back(json{{"mode", mode},
                               {"sign", sign > 0 ? "+" : "-"},
                               {"count", map.aspects.size()},
                               {"aspects", aspect_summary(map, joint_space)}});
        }
    }
    if (format == "json") {
        std::printf("%s\n", out.dump(2).c_str());
        return kExitOk;
    }
    std::printf("space %s (areas in %s)\n", space_arg.c_str(),
                joint_space ? "deg^2" : "length^2");
    std::printf("%-6s %-5s %-6s %s\n", "mode", "sign", "count", "areas");
    for (const json& row : out) {
        std::string areas;
        for (const json& a : row.at("aspects")) {
            if (!areas.empty()) areas += ", ";
            char buf[64];
            std::snprintf(buf, sizeof buf, "%s=%.4g", a.at("id").get<std::string>().c_str(),
                          a.at("area").get<double>());
            areas += buf;
        }
        std::printf("%-6d %-5s %-6zu %s\n", row.at("mode").get<int>(),
                    row.at("sign").get<std::string>().c_str(),
                    (size_t)row.at("count").get<size_t>(), areas.c_str());
    }
    return kExitOk;
}

int cmd_check_path(const ProjectConfig& cfg, const std::string& path_file, int mode, int sign) {
    const BuildParams params = cfg.build_params(SpaceKind::Workspace);
    Trajectory traj;
    try {
        traj = load_trajectory(path_file, params.min_cell / 2.0);
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kExitFailure;
    }

    const AspectMap map =
        build_or_load_map(cfg, SpaceKind::Workspace, mode, sign, 0.0, true);
    const FeasibilityVerdict verdict = check_path(cfg.geometry, map, traj, cfg.obstacles);

    json report;
    report["feasible"] = verdict.feasible;
    report["mode"] = mode;
    report["sign"] = sign > 0 ? "+" : "-";
    if (verdict.aspect_ordinal)
        report["aspect"] = map.aspects[*verdict.aspect_ordinal].id.str();
    if (verdict.blocked_at) report["blocked_at"] = *verdict.blocked_at;
    if (verdict.reason) report["reason"] = cell_label_name(*verdict.reason);

    if (verdict.feasible) {
        std::printf("feasible: the whole path stays in aspect %s (mode %d, sign %s)\n",
                    map.aspects[*verdict.aspect_ordinal].id.str().c_str(), mode,
                    sign > 0 ? "+" : "-");
    } else {
        std::printf("infeasible: blocked at arc length %.6g (%s)\n",
                    verdict.blocked_at.value_or(0.0),
                    verdict.reason ? cell_label_name(*verdict.reason) : "?");
        const LocateResult from = locate(map, traj.waypoints.front());
        const LocateResult to = locate(map, traj.waypoints.back());
        if (from.status == LocateResult::Status::InAspect)
            std::printf("  start lies in aspect %s\n",
                        map.aspects[from.aspect_ordinal].id.str().c_str());
        if (to.status == LocateResult::Status::InAspect)
            std::printf("  goal lies in aspect %s\n",
                        map.aspects[to.aspect_ordinal].id.str().c_str());
    }
    std::printf("%s\n", report.dump().c_str());
    return verdict.feasible ? kExitOk : kExitFailure;
}

int cmd_moveability(const ProjectConfig& cfg, const Point2& from, const Point2& to) {
    std::vector<AspectMap> maps;
    maps.reserve(8);
    for (int mode = 1; mode <= 4; ++mode)
        for (int sign : {+1, -1})
            maps.push_back(build_or_load_map(cfg, SpaceKind::Workspace, mode, sign, 0.0, true));

    const auto options = moveability(maps, from, to);
    if (options.empty()) {
        std::printf("no working mode offers a common free aspect for both poses\n");
        return kExitFailure;
    }
    for (const MoveabilityOption& opt : options)
        std::printf("mode %d sign %s aspect %s\n", opt.mode.index(),
                    opt.det_sign > 0 ? "+" : "-", opt.aspect_id.str().c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"moveability analysis for the planar five-bar parallel manipulator"};
    app.require_subcommand(1);
    std::string config_path = "mvkit.json";
    app.add_option("-c,--config", config_path, "project configuration file")
        ->envname("MVKIT_CONFIG");

    // validate
    std::string validate_path;
    CLI::App* validate = app.add_subcommand("validate", "validate a configuration file");
    validate->add_option("config", validate_path, "configuration file")->required();

    // map
    std::string map_space, map_out, map_sign = "+";
    int map_mode = 1;
    double map_min_cell = 0;
    CLI::App* map_cmd = app.add_subcommand("map", "build and render one decomposition");
    map_cmd->add_option("space", map_space, "w or q")
        ->required()
        ->check(CLI::IsMember({"w", "q"}));
    map_cmd->add_option("--mode", map_mode, "working mode 1..4")
        ->required()
        ->check(CLI::Range(1, 4));
    map_cmd->add_option("--sign", map_sign, "det(A) sign, + or -")->required();
    map_cmd->add_option("--min-cell", map_min_cell, "requested minimum cell size");
    map_cmd->add_option("--out", map_out, "output SVG path")->required();

    // aspects
    std::string aspects_format = "table", aspects_space = "w";
    double aspects_min_cell = 0;
    CLI::App* aspects_cmd = app.add_subcommand("aspects", "enumerate free aspects");
    aspects_cmd->add_option("--format", aspects_format, "table or json")
        ->check(CLI::IsMember({"table", "json"}));
    aspects_cmd->add_option("--space", aspects_space, "w or q")
        ->check(CLI::IsMember({"w", "q"}));
    aspects_cmd->add_option("--min-cell", aspects_min_cell, "requested minimum cell size");

    // check-path
    std::string path_file, path_sign = "+";
    int path_mode = 1;
    CLI::App* path_cmd = app.add_subcommand("check-path", "check a trajectory for feasibility");
    path_cmd->add_option("file", path_file, "trajectory JSON file")->required();
    path_cmd->add_option("--mode", path_mode, "working mode 1..4")
        ->required()
        ->check(CLI::Range(1, 4));
    path_cmd->add_option("--sign", path_sign, "det(A) sign, + or -")->required();

    // moveability
    std::string from_str, to_str;
    CLI::App* move_cmd =
        app.add_subcommand("moveability", "list (mode, sign) pairs joining two poses");
    move_cmd->add_option("--from", from_str, "start pose X,Y")->required();
    move_cmd->add_option("--to", to_str, "goal pose X,Y")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(validate_path);

        const ProjectConfig cfg = load_project_config(config_path);
        if (map_cmd->parsed())
            return cmd_map(cfg, map_space, map_mode, parse_sign(map_sign), map_min_cell,
                           map_out);
        if (aspects_cmd->parsed())
            return cmd_aspects(cfg, aspects_space, aspects_format, aspects_min_cell);
        if (path_cmd->parsed())
            return cmd_check_path(cfg, path_file, path_mode, parse_sign(path_sign));
        if (move_cmd->parsed()) {
            const auto [fx, fy] = parse_xy(from_str);
            const auto [tx, ty] = parse_xy(to_str);
            return cmd_moveability(cfg, Point2(fx, fy), Point2(tx, ty));
        }
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const ConfigError& e) {
        print_config_error(e);
        return kExitFailure;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitUsage;
}
