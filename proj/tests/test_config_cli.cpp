#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "nbsde/cli.hpp"
#include "nbsde/config.hpp"
#include "nbsde/errors.hpp"
#include "nbsde/mesh.hpp"

using namespace nbsde;
namespace fs = std::filesystem;

namespace
{
fs::path data(std::string const& name)
{
    return fs::path(NBSDE_TEST_DATA) / name;
}

fs::path scratch(std::string const& name)
{
    auto dir = fs::temp_directory_path() / "nbsde_cli_unit" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(fs::path const& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Run
{
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "nbsde");
    std::ostringstream out, err;
    int const code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string config_error(std::string const& text)
{
    try
    {
        parse_config(text, "test.ini");
    }
    catch (ConfigError const& e)
    {
        return e.what();
    }
    return {};
}

//! Manufactured config with a small stochastic budget.
fs::path quick_config(fs::path const& dir)
{
    std::string text = slurp(data("manufactured_k0.ini"));
    std::string const from = "paths = 2000";
    text.replace(text.find(from), from.size(),
                 "paths = 400\nprobe_points = 2\nprobe_paths = 200\nprobe_horizon = 4\nstep = 1e-3");
    for (std::string const line : {"step = 2.5e-4\n", "probe_paths = 1000\n"})
        text.erase(text.find(line), line.size());
    fs::path const p = dir / "quick.ini";
    std::ofstream(p) << text;
    return p;
}
}  // namespace

TEST_SUITE("config")
{
    TEST_CASE("manufactured configs parse")
    {
        RunConfig const c = load_config(data("manufactured_k01.ini"));
        CHECK(c.domain_kind == "disk");
        CHECK(c.constants.k == 0.1);
        CHECK(c.coeffs.g.size() == 2);
        CHECK(c.coeffs.g_depends_on_solution());
        CHECK(c.solver.mesh_h == 0.05);
        CHECK(c.solver.seed == 12);
        CHECK(c.reference.has_value());
        CHECK(c.h1_threshold == 0.06);
        CHECK(c.domain().volume() == doctest::Approx(3.141592653589793));
    }

    TEST_CASE("defaults and quoting")
    {
        RunConfig const c = parse_config("[coefficients]\nf = \"y - 1\"  \n; comment\n# other\n");
        CHECK(c.coefficient_text.at("f") == "y - 1");
        CHECK(c.coeffs.h.is_zero_literal());
        CHECK(c.solver.backend == Backend::fem);
        CHECK(c.variant == ConstantsVariant::probabilistic);
    }

    TEST_CASE("diagnostics name the line")
    {
        CHECK(config_error("[solver]\nmesh_h = 0.1\nfoo = 1\n") == "test.ini:3: unknown key 'foo' in [solver]");
        CHECK(config_error("[nope]\n").find("unknown section [nope]") != std::string::npos);
        CHECK(config_error("[solver]\ntol = 1\ntol = 2\n").find("test.ini:3: duplicate key") == 0);
        CHECK(config_error("[solver]\nmesh_h = abc\n").find("test.ini:2: mesh_h: expected a number") == 0);
        CHECK(config_error("[solver]\nmesh_h = -1\n").find("must be positive") != std::string::npos);
        CHECK(config_error("mesh_h = 1\n").find("outside of any section") != std::string::npos);
        CHECK(config_error("[coefficients]\n\nf = \"x1 + * 2\"\n").find("test.ini:3: f:") == 0);
        CHECK(config_error("[coefficients]\nf = \"x1 + * 2\"\n").find("offset 5") != std::string::npos);
        CHECK(config_error("[coefficients]\nf = \"foo(y)\"\n").find("foo") != std::string::npos);
        CHECK(config_error("[coefficients]\ng3 = 1\n").find("requires dimension 3") != std::string::npos);
        CHECK(config_error("[domain]\nkind = square\n").find("kind must be") != std::string::npos);
        CHECK(config_error("[constants]\nvariant = magic\n").find("variant must be") != std::string::npos);
        CHECK(config_error("[solver]\nbackend = gpu\n").find("backend must be") != std::string::npos);
        CHECK(config_error("[coefficients]\nf = \"1\n").find("unterminated") != std::string::npos);
        CHECK_THROWS_AS(load_config(data("does_not_exist.ini")), ConfigError);
    }

    TEST_CASE("three-dimensional ball")
    {
        RunConfig const c = parse_config(
            "[domain]\nkind = ball\ndimension = 3\n[coefficients]\ng3 = \"x3\"\nq = \"-x3^2\"\n");
        CHECK(c.coeffs.g.size() == 3);
        CHECK(c.domain().dimension() == 3);
    }
}

TEST_SUITE("cli")
{
    TEST_CASE("solve the manufactured problem")
    {
        fs::path const out = scratch("solve");
        Run const r = cli({"solve", "--config", data("manufactured_k0.ini").string(), "--out", out.string()});
        CHECK(r.code == exit_ok);
        auto const summary = nlohmann::json::parse(slurp(out / "summary.json"));
        CHECK(summary.at("converged").get<bool>());
        CHECK(summary.at("reference").at("h1_error").get<double>() < 0.06);
        CHECK(summary.at("gamma").get<double>() == 0);
        CHECK(fs::exists(out / "solution.csv"));
        CHECK(fs::exists(out / "trace.csv"));
        CHECK(fs::exists(out / "mesh.txt"));
    }

    TEST_CASE("exit codes")
    {
        fs::path const out = scratch("codes");
        Run r = cli({"solve", "--config", data("inadmissible_k05.ini").string(), "--out", out.string()});
        CHECK(r.code == exit_inadmissible);
        CHECK(r.err.find("k < 1/(2√2)") != std::string::npos);

        r = cli({"solve", "--config", data("bad_f.ini").string(), "--out", out.string()});
        CHECK(r.code == exit_config);
        CHECK(r.err.find("offset") != std::string::npos);

        r = cli({"solve", "--config", data("missing.ini").string()});
        CHECK(r.code == exit_config);
        r = cli({"frobnicate"});
        CHECK(r.code == exit_config);
        r = cli({"solve"});
        CHECK(r.code == exit_config);

        r = cli({"solve", "--config", data("inadmissible_k05.ini").string(), "--out", out.string(),
                 "--override-admissibility"});
        CHECK(r.code == exit_ok);
        auto const summary = nlohmann::json::parse(slurp(out / "summary.json"));
        CHECK(summary.at("guarantee_void").get<bool>());
        CHECK(summary.at("gamma").is_null());

        fs::path const cfg = out / "diverge.ini";
        std::ofstream(cfg) << "[coefficients]\nf = \"1 - y\"\ng1 = \"2*z1\"\ng2 = \"2*z2\"\nh = \"-y\"\n"
                              "q = \"-1\"\n[constants]\nalpha = 2\nbeta = 1\nK = 1\nk = 0.1\n"
                              "beta_prime = 1\nM = 4\n[solver]\nmesh_h = 0.1\nvalidation_budget = 10\n";
        r = cli({"solve", "--config", cfg.string(), "--out", out.string()});
        CHECK(r.code == exit_no_contraction);
    }

    TEST_CASE("identical config and seed give byte-identical outputs")
    {
        fs::path const a = scratch("det_a"), b = scratch("det_b");
        auto const cfg = data("manufactured_k01.ini").string();
        REQUIRE(cli({"solve", "--config", cfg, "--out", a.string()}).code == exit_ok);
        REQUIRE(cli({"solve", "--config", cfg, "--out", b.string()}).code == exit_ok);
        for (auto const* f : {"solution.csv", "trace.csv", "summary.json", "mesh.txt"})
            CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);

        fs::path const c = scratch("det_c"), d = scratch("det_d"), e = scratch("det_e");
        auto const q = data("manufactured_k0.ini").string();
        REQUIRE(cli({"simulate", "--config", q, "--out", c.string(), "--count", "2"}).code == exit_ok);
        REQUIRE(cli({"simulate", "--config", q, "--out", d.string(), "--count", "2"}).code == exit_ok);
        REQUIRE(cli({"simulate", "--config", q, "--out", e.string(), "--count", "2", "--seed", "5"}).code
                == exit_ok);
        CHECK(slurp(c / "paths.csv") == slurp(d / "paths.csv"));
        CHECK(slurp(c / "path_0001.bin") == slurp(d / "path_0001.bin"));
        CHECK(slurp(c / "paths.csv") != slurp(e / "paths.csv"));
    }

    TEST_CASE("verify accepts the solver output and rejects a zero field")
    {
        fs::path const out = scratch("verify");
        fs::path const cfg = quick_config(out);
        REQUIRE(cli({"solve", "--config", cfg.string(), "--out", out.string()}).code == exit_ok);
        Run const good = cli({"verify", "--config", cfg.string(), "--out", out.string()});
        CHECK_MESSAGE(good.code == exit_ok, good.out);
        CHECK(good.out.find("verify: pass") != std::string::npos);
        CHECK(fs::exists(out / "verify.json"));

        Mesh const mesh = read_mesh(out / "mesh.txt");
        write_field_csv(mesh, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_nodes())),
                        out / "zero.csv");
        Run const bad = cli({"verify", "--config", cfg.string(), "--out", out.string(), "--field",
                             (out / "zero.csv").string()});
        CHECK(bad.code == exit_check_failed);
        CHECK(bad.out.find("NO") != std::string::npos);

        Run const missing = cli({"verify", "--config", cfg.string(), "--out", out.string(), "--field",
                                 (out / "nothing.csv").string()});
        CHECK(missing.code == exit_config);
    }

    TEST_CASE("bench writes its suites")
    {
        fs::path const out = scratch("bench");
        fs::path const cfg = out / "bench.ini";
        std::ofstream(cfg) << "[solver]\npaths = 50\nstep = 1e-3\nhorizon = 0.5\n";
        Run const r = cli({"bench", "--config", cfg.string(), "--out", out.string()});
        CHECK(r.code == exit_ok);
        auto const j = nlohmann::json::parse(slurp(out / "bench.json"));
        CHECK(j.at("local_time_rate_target").get<double>() == doctest::Approx(2));
        CHECK(j.at("star_identity_target").get<double>() == doctest::Approx(-1));
    }
}
