#pragma once

// Parser for the supported subset of the MATPOWER text grammar:
// scalar assignments (mpc.baseMVA = 100;) and bracketed numeric matrices
// (mpc.bus / mpc.gen / mpc.branch with the standard column orders).
// '%' starts a comment. Unknown mpc fields are skipped with a warning.

#include <cctype>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "laasim/network.hpp"

namespace laasim {

struct ParseError : std::runtime_error {
    int line = 0;
    int column = 0;
    ParseError(const std::string& msg, int l, int c)
        : std::runtime_error("line " + std::to_string(l) + ", col " +
                             std::to_string(c) + ": " + msg),
          line(l),
          column(c) {}
};

namespace detail {

class CaseLexer {
public:
    explicit CaseLexer(const std::string& text) : text_(text) {}

    void skip_ws() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '%') {
                while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
            } else if (c == '\n') {
                ++line_;
                col_ = 1;
                ++pos_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++col_;
                ++pos_;
            } else {
                break;
            }
        }
    }

    bool eof() {
        skip_ws();
        return pos_ >= text_.size();
    }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    char get() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    bool consume(char c) {
        skip_ws();
        if (peek() == c) {
            get();
            return true;
        }
        return false;
    }

    void expect(char c) {
        skip_ws();
        if (!consume(c))
            throw ParseError(std::string("expected '") + c + "'", line_, col_);
    }

    std::string identifier() {
        skip_ws();
        std::string s;
        while (pos_ < text_.size()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
                c == '.') {
                s += get();
            } else {
                break;
            }
        }
        return s;
    }

    double number() {
        skip_ws();
        size_t start = pos_;
        int l = line_, c = col_;
        while (pos_ < text_.size()) {
            char ch = peek();
            if (std::isdigit(static_cast<unsigned char>(ch)) || ch == '+' ||
                ch == '-' || ch == '.' || ch == 'e' || ch == 'E') {
                get();
            } else {
                break;
            }
        }
        if (pos_ == start) throw ParseError("expected a number", l, c);
        try {
            return std::stod(text_.substr(start, pos_ - start));
        } catch (const std::exception&) {
            throw ParseError("malformed number '" +
                                 text_.substr(start, pos_ - start) + "'",
                             l, c);
        }
    }

    int line() const { return line_; }
    int column() const { return col_; }

private:
    const std::string& text_;
    size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

inline BusKind bus_kind_from_code(double code, int ext, int line) {
    int t = static_cast<int>(code);
    switch (t) {
        case 1: return BusKind::PQ;
        case 2: return BusKind::PV;
        case 3: return BusKind::Slack;
        default:
            throw ParseError("bus " + std::to_string(ext) +
                                 ": unsupported type code " + std::to_string(t),
                             line, 1);
    }
}

}  // namespace detail

struct ParsedCase {
    Network network;
    std::vector<std::string> warnings;
};

inline ParsedCase parse_case(const std::string& text) {
    detail::CaseLexer lex(text);
    std::optional<double> base_mva;
    std::vector<std::vector<double>> bus_rows, gen_rows, branch_rows;
    std::vector<std::string> warnings;

    while (!lex.eof()) {
        int l = lex.line(), c = lex.column();
        std::string name = lex.identifier();
        if (name.empty())
            throw ParseError("expected an identifier", lex.line(), lex.column());
        if (name == "function") {
            // "function mpc = caseXX" header line
            lex.identifier();
            lex.expect('=');
            lex.identifier();
            continue;
        }
        lex.expect('=');
        lex.skip_ws();
        bool matrix = lex.peek() == '[';
        std::vector<std::vector<double>> rows;
        double scalar = 0.0;
        if (matrix) {
            lex.expect('[');
            std::vector<double> row;
            while (true) {
                lex.skip_ws();
                if (lex.peek() == ']') {
                    lex.get();
                    if (!row.empty()) rows.push_back(row);
                    break;
                }
                if (lex.peek() == ';') {
                    lex.get();
                    if (!row.empty()) rows.push_back(std::move(row));
                    row.clear();
                    continue;
                }
                if (lex.peek() == ',') {
                    lex.get();
                    continue;
                }
                row.push_back(lex.number());
            }
            lex.consume(';');
        } else if (lex.peek() == '\'') {
            // quoted string value (e.g. mpc.version)
            lex.get();
            std::string s;
            while (lex.peek() != '\'' && lex.peek() != '\0') s += lex.get();
            lex.expect('\'');
            lex.consume(';');
            if (name != "mpc.version")
                warnings.push_back("skipped string field " + name);
            continue;
        } else {
            scalar = lex.number();
            lex.consume(';');
        }

        if (name == "mpc.baseMVA") {
            if (matrix) throw ParseError("mpc.baseMVA must be a scalar", l, c);
            base_mva = scalar;
        } else if (name == "mpc.bus") {
            bus_rows = std::move(rows);
        } else if (name == "mpc.gen") {
            gen_rows = std::move(rows);
        } else if (name == "mpc.branch") {
            branch_rows = std::move(rows);
        } else {
            warnings.push_back("skipped field " + name);
        }
    }

    if (!base_mva) throw ParseError("missing mpc.baseMVA", 1, 1);
    if (bus_rows.empty()) throw ParseError("missing mpc.bus", 1, 1);
    if (branch_rows.empty()) throw ParseError("missing mpc.branch", 1, 1);

    Network net;
    net.base_mva = *base_mva;
    std::map<int, int> ext2canon;
    for (size_t i = 0; i < bus_rows.size(); ++i) {
        const auto& r = bus_rows[i];
        if (r.size() != 13)
            throw ParseError("bus row " + std::to_string(i + 1) + " has " +
                                 std::to_string(r.size()) +
                                 " columns, expected 13",
                             1, 1);
        Bus b;
        b.id = static_cast<int>(i);
        b.external_id = static_cast<int>(r[0]);
        b.kind = detail::bus_kind_from_code(r[1], b.external_id, 1);
        b.p_load_mw = r[2];
        b.q_load_mvar = r[3];
        b.g_shunt_mw = r[4];
        b.b_shunt_mvar = r[5];
        b.v_setpoint = r[7] > 0.0 ? r[7] : 1.0;
        b.base_kv = r[9];
        b.v_max = r[11];
        b.v_min = r[12];
        if (!ext2canon.emplace(b.external_id, b.id).second)
            throw ParseError("duplicate bus id " +
                                 std::to_string(b.external_id),
                             1, 1);
        net.buses.push_back(b);
    }
    for (size_t i = 0; i < gen_rows.size(); ++i) {
        const auto& r = gen_rows[i];
        if (r.size() < 10)
            throw ParseError("gen row " + std::to_string(i + 1) +
                                 " has fewer than 10 columns",
                             1, 1);
        Generator g;
        auto it = ext2canon.find(static_cast<int>(r[0]));
        if (it == ext2canon.end())
            throw ParseError("gen row " + std::to_string(i + 1) +
                                 ": unknown bus " +
                                 std::to_string(static_cast<int>(r[0])),
                             1, 1);
        g.bus = it->second;
        g.p_mw = r[1];
        g.q_mvar = r[2];
        g.q_max_mvar = r[3];
        g.q_min_mvar = r[4];
        g.v_setpoint = r[5];
        g.in_service = r[7] > 0.0;
        g.p_max_mw = r[8];
        g.p_min_mw = r[9];
        if (g.in_service && r[5] > 0.0)
            net.buses[static_cast<size_t>(g.bus)].v_setpoint = r[5];
        net.generators.push_back(g);
    }
    for (size_t i = 0; i < branch_rows.size(); ++i) {
        const auto& r = branch_rows[i];
        if (r.size() != 13)
            throw ParseError("branch row " + std::to_string(i + 1) + " has " +
                                 std::to_string(r.size()) +
                                 " columns, expected 13",
                             1, 1);
        Branch br;
        auto fit = ext2canon.find(static_cast<int>(r[0]));
        auto tit = ext2canon.find(static_cast<int>(r[1]));
        if (fit == ext2canon.end() || tit == ext2canon.end())
            throw ParseError("branch row " + std::to_string(i + 1) +
                                 ": endpoint references unknown bus " +
                                 std::to_string(static_cast<int>(
                                     fit == ext2canon.end() ? r[0] : r[1])),
                             1, 1);
        br.from_bus = fit->second;
        br.to_bus = tit->second;
        br.r = r[2];
        br.x = r[3];
        br.b_charging = r[4];
        br.rate_mva = r[5];
        br.tap = r[8] != 0.0 ? r[8] : 1.0;
        br.shift_deg = r[9];
        br.status =
            r[10] > 0.0 ? BranchStatus::InService : BranchStatus::Deactivated;
        net.branches.push_back(br);
    }

    net.validate();
    return ParsedCase{std::move(net), std::move(warnings)};
}

inline ParsedCase parse_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file " + path, 0, 0);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

/// Emits the network back in the supported grammar. parse(serialize(net))
/// reproduces the same Network value.
inline std::string serialize_case(const Network& net,
                                  const std::string& name = "mpc_case") {
    std::ostringstream out;
    out.precision(17);
    out << "function mpc = " << name << "\n";
    out << "mpc.baseMVA = " << net.base_mva << ";\n";
    out << "mpc.bus = [\n";
    for (const auto& b : net.buses) {
        int type = b.kind == BusKind::Slack ? 3 : (b.kind == BusKind::PV ? 2 : 1);
        out << "\t" << b.external_id << "\t" << type << "\t" << b.p_load_mw
            << "\t" << b.q_load_mvar << "\t" << b.g_shunt_mw << "\t"
            << b.b_shunt_mvar << "\t1\t" << b.v_setpoint << "\t0\t" << b.base_kv
            << "\t1\t" << b.v_max << "\t" << b.v_min << ";\n";
    }
    out << "];\n";
    out << "mpc.gen = [\n";
    for (const auto& g : net.generators) {
        out << "\t" << net.buses[static_cast<size_t>(g.bus)].external_id << "\t"
            << g.p_mw << "\t" << g.q_mvar << "\t" << g.q_max_mvar << "\t"
            << g.q_min_mvar << "\t" << g.v_setpoint << "\t" << net.base_mva
            << "\t" << (g.in_service ? 1 : 0) << "\t" << g.p_max_mw << "\t"
            << g.p_min_mw << ";\n";
    }
    out << "];\n";
    out << "mpc.branch = [\n";
    for (const auto& br : net.branches) {
        out << "\t" << net.buses[static_cast<size_t>(br.from_bus)].external_id
            << "\t" << net.buses[static_cast<size_t>(br.to_bus)].external_id
            << "\t" << br.r << "\t" << br.x << "\t" << br.b_charging << "\t"
            << br.rate_mva << "\t" << br.rate_mva << "\t" << br.rate_mva << "\t"
            << (br.tap == 1.0 ? 0.0 : br.tap) << "\t" << br.shift_deg << "\t"
            << (br.in_service() ? 1 : 0) << "\t-360\t360;\n";
    }
    out << "];\n";
    return out.str();
}

}  // namespace laasim
