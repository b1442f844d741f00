#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "twrelay/channel.hpp"
#include "twrelay/exchange.hpp"
#include "twrelay/rates.hpp"

namespace {

using namespace twrelay;

struct CmdResult {
    int status = -1;
    std::string out;  // stdout and stderr interleaved
};

CmdResult run_cli(const std::string& args) {
    const std::string cmd = std::string(TWRELAY_CLI_PATH) + " " + args + " 2>&1";
    std::FILE* pipe = ::popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    CmdResult r;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int rc = ::pclose(pipe);
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    return r;
}

const std::string& work_dir() {
    static const std::string dir = [] {
        char tmpl[] = "/tmp/twrelay_cli_XXXXXX";
        char* d = ::mkdtemp(tmpl);
        REQUIRE(d != nullptr);
        return std::string(d);
    }();
    return dir;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// "key value" report lines printed by the solve subcommand
std::map<std::string, std::string> parse_report(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto sp = line.find(' ');
        if (sp == std::string::npos) continue;
        kv[line.substr(0, sp)] = line.substr(sp + 1);
    }
    return kv;
}

double field(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    REQUIRE(it != kv.end());
    return std::stod(it->second);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

std::vector<double> parse_power_line(std::istream& in, const std::string& name) {
    std::string line;
    REQUIRE(std::getline(in, line));
    REQUIRE(line.rfind(name + ":", 0) == 0);
    std::istringstream vals(line.substr(name.size() + 1));
    std::vector<double> v;
    double x = 0.0;
    while (vals >> x) v.push_back(x);
    return v;
}

constexpr const char* kFastFlags = "--max-iters 2000 --polish-stages 30 --polish-iters 100";

}  // namespace

TEST_CASE("the channel generator command writes a loadable fixture") {
    const std::string path = work_dir() + "/chan_gen.txt";
    const CmdResult r =
        run_cli("gen-channels --subcarriers 6 --taps 3 --seed 77 --out " + path);
    REQUIRE(r.status == 0);
    CHECK(r.out.find(path) != std::string::npos);
    const ChannelRealization ch = load_channel(path);
    const ChannelRealization want = generate_channel(6, 3, 77);
    REQUIRE(ch.n_subcarriers == want.n_subcarriers);
    CHECK(ch.n_taps == want.n_taps);
    for (int i = 0; i < ch.n_subcarriers; ++i) {
        CHECK(ch.g1[i] == want.g1[i]);
        CHECK(ch.g2[i] == want.g2[i]);
        CHECK(ch.gt1[i] == want.gt1[i]);
        CHECK(ch.gt2[i] == want.gt2[i]);
    }
}

TEST_CASE("solving a fixture reports the bottleneck rate") {
    const std::string chan = work_dir() + "/chan_solve.txt";
    REQUIRE(run_cli("gen-channels --subcarriers 6 --taps 3 --seed 5 --out " + chan).status == 0);
    const std::string args = "solve --channel " + chan + " --p1max 6 --p2max 6 --prmax 6 " +
                             kFastFlags;
    const CmdResult r = run_cli(args);
    REQUIRE(r.status == 0);
    const auto kv = parse_report(r.out);
    CHECK(kv.at("scheme") == "type1-opt");
    const double bottleneck =
        std::min({field(kv, "c_ma_1"), field(kv, "c_ma_2"), 0.5 * field(kv, "c_ma_sum"),
                  field(kv, "c_bc_1"), field(kv, "c_bc_2")});
    CHECK(field(kv, "r_exchange") == doctest::Approx(bottleneck).epsilon(1e-9));
    CHECK(field(kv, "r_exchange") > 0.0);
    CHECK(field(kv, "iterations_ma") > 0.0);
    CHECK(field(kv, "iterations_bc") > 0.0);
    CHECK(field(kv, "kkt_residual_ma") >= 0.0);
    CHECK(field(kv, "kkt_residual_bc") >= 0.0);

    const CmdResult again = run_cli(args);
    CHECK(again.status == 0);
    CHECK(again.out == r.out);
}

TEST_CASE("the uniform scheme prints the library evaluation") {
    const std::string chan = work_dir() + "/chan_uniform.txt";
    REQUIRE(run_cli("gen-channels --subcarriers 5 --taps 2 --seed 9 --out " + chan).status == 0);
    const CmdResult r = run_cli("solve --channel " + chan +
                                " --p1max 2 --p2max 3 --prmax 4 --mu 0.4 --scheme type1-uniform");
    REQUIRE(r.status == 0);
    const auto kv = parse_report(r.out);
    CHECK(kv.at("scheme") == "type1-uniform");
    Budgets budgets;
    budgets.p1_max = 2.0;
    budgets.p2_max = 3.0;
    budgets.pr_max = 4.0;
    budgets.mu = 0.4;
    const EvaluatedAllocation want = solve_uniform(generate_channel(5, 2, 9), budgets);
    CHECK(field(kv, "r_exchange") == doctest::Approx(want.rates.r_exchange).epsilon(1e-10));
    CHECK(field(kv, "c_ma_sum") == doctest::Approx(want.rates.c_ma_sum).epsilon(1e-10));
    CHECK(field(kv, "c_bc_1") == doctest::Approx(want.rates.c_bc_1).epsilon(1e-10));
}

TEST_CASE("allocation files round-trip the solved powers") {
    const std::string chan = work_dir() + "/chan_pa.txt";
    const std::string paf = work_dir() + "/alloc_pa.txt";
    REQUIRE(run_cli("gen-channels --subcarriers 4 --taps 2 --seed 12 --out " + chan).status == 0);
    const CmdResult r =
        run_cli("solve --channel " + chan + " --p1max 4 --p2max 4 --prmax 4 --scheme type2-opt " +
                kFastFlags + " --pa-out " + paf);
    REQUIRE(r.status == 0);
    const auto kv = parse_report(r.out);

    std::ifstream in(paf);
    REQUIRE(in.good());
    std::string head;
    REQUIRE(std::getline(in, head));
    CHECK(head == "N=4");
    PowerAllocation pa;
    pa.p1 = parse_power_line(in, "p1");
    pa.p2 = parse_power_line(in, "p2");
    pa.pr = parse_power_line(in, "pr");
    REQUIRE(pa.p1.size() == 4);
    REQUIRE(pa.p2.size() == 4);
    REQUIRE(pa.pr.size() == 4);

    Budgets budgets;
    budgets.p1_max = budgets.p2_max = budgets.pr_max = 4.0;
    CHECK(check_feasible(pa, budgets));
    const RateSummary rates = type2_rates(generate_channel(4, 2, 12), pa, budgets);
    CHECK(rates.r_exchange == doctest::Approx(field(kv, "r_exchange")).epsilon(1e-9));
}

TEST_CASE("bad requests exit with an error") {
    const std::string chan = work_dir() + "/chan_err.txt";
    REQUIRE(run_cli("gen-channels --subcarriers 2 --taps 1 --seed 1 --out " + chan).status == 0);

    CmdResult r = run_cli("solve --channel " + chan +
                          " --p1max 1 --p2max 1 --prmax 1 --scheme type3-opt");
    CHECK(r.status != 0);
    CHECK(r.out.find("unknown scheme") != std::string::npos);

    r = run_cli("solve --channel " + work_dir() +
                "/missing.txt --p1max 1 --p2max 1 --prmax 1");
    CHECK(r.status != 0);

    r = run_cli("solve --channel " + chan + " --p2max 1 --prmax 1");
    CHECK(r.status != 0);

    r = run_cli("sweep --snr-db 0 --schemes af type5 --out " + work_dir() + "/err.csv");
    CHECK(r.status != 0);
    CHECK(r.out.find("unknown scheme") != std::string::npos);

    r = run_cli("gen-channels --subcarriers 0 --out " + work_dir() + "/err.txt");
    CHECK(r.status != 0);
}

TEST_CASE("small sweeps produce one row per point and scheme") {
    const std::string csv = work_dir() + "/sweep_grid.csv";
    const CmdResult r = run_cli("sweep --snr-db=0 --snr-db=-30 --n 3 --seed 3 "
                                "--subcarriers 4 --taps 2 --out " + csv);
    REQUIRE(r.status == 0);

    std::istringstream in(read_file(csv));
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "snr_db,scheme,mean_rate_bps_hz,stderr,n,failures");
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) rows.push_back(split(line, ','));
    REQUIRE(rows.size() == 6);

    const char* order[] = {"type1-opt", "type1-uniform", "type2-opt"};
    for (int i = 0; i < 6; ++i) {
        REQUIRE(rows[i].size() == 6);
        CHECK(std::stod(rows[i][0]) == (i < 3 ? -30.0 : 0.0));
        CHECK(rows[i][1] == order[i % 3]);
        CHECK(std::stol(rows[i][4]) == 3);
        CHECK(std::stol(rows[i][5]) == 0);
    }
    for (int i = 0; i < 3; ++i) {
        const double mean = std::stod(rows[i][2]);
        CHECK(mean > 0.0);
        CHECK(mean < 0.01);
        CHECK(std::stod(rows[i][3]) >= 0.0);
    }
    // At 0 dB the optimized joint scheme leads both baselines on average. The
    // margin over the per-subcarrier optimum allows for the solver tolerance.
    CHECK(std::stod(rows[3][2]) >= std::stod(rows[4][2]) - 1e-9);
    CHECK(std::stod(rows[3][2]) >= std::stod(rows[5][2]) - 1e-4);
}

TEST_CASE("sweeps are reproducible and mark absent schemes") {
    const std::string a = work_dir() + "/rep_a.csv";
    const std::string b = work_dir() + "/rep_b.csv";
    const std::string base = "sweep --snr-db 5 --n 2 --seed 11 --subcarriers 3 --taps 2 "
                             "--schemes af af type1-uniform type2-opt --mu 0.45 " +
                             std::string(kFastFlags);
    REQUIRE(run_cli(base + " --out " + a).status == 0);
    REQUIRE(run_cli(base + " --out " + b).status == 0);
    CHECK(read_file(a) == read_file(b));

    std::istringstream in(read_file(a));
    std::string line;
    REQUIRE(std::getline(in, line));  // header
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) rows.push_back(split(line, ','));
    REQUIRE(rows.size() == 3);  // duplicate scheme names collapse
    CHECK(rows[0][1] == "af");
    CHECK(rows[0][2].empty());
    CHECK(rows[0][3].empty());
    CHECK(rows[1][1] == "type1-uniform");
    CHECK(rows[2][1] == "type2-opt");
    CHECK(std::stod(rows[1][2]) > 0.0);
}
