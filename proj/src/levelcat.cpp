#include "rotsim/levelcat.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "rotsim/constants.hpp"
#include "rotsim/errors.hpp"
#include "rotsim/format.hpp"

namespace rotsim {

namespace {

constexpr double kMHz = 1.0e6;
constexpr double kkHz = 1.0e3;

HyperfineState make_state(int v, int n, int f, int s, int j) {
    HyperfineState st;
    st.level.v = v;
    st.level.n = n;
    // rigid-rotor energy offset, B_rot = f0/2
    st.level.energy_offset_hz = 0.5 * kReferenceFrequencyHz * n * (n + 1);
    st.f = f;
    st.s = s;
    st.j = j;
    return st;
}

struct ListRow {
    const char* name;
    std::vector<double> entries_mhz;
};

const std::vector<ListRow>& table_rows() {
    // Entry order follows the lower hyperfine state columns
    // (1,2,2), (1,1,1), (1,0,0), (0,1,1); list A' carries the four
    // field-compensation frequencies for the (1,1,1) state.
    static const std::vector<ListRow> rows = {
        {"A'", {-33.211, -6.597, -6.578, -6.558, -6.539, -9.069, -2.138}},
        {"A", {-33.211, -6.539, -9.069, -2.138}},
        {"B", {-34.993, -7.850, -9.773, -2.465}},
        {"C", {-31.408, -5.096, -8.355, -1.812}},
        {"D", {-34.102, -7.194, -9.421, -2.301}},
        {"E", {-32.310, -5.817, -8.712, -1.975}},
        {"detuned500", {500.0}},
    };
    return rows;
}

HyperfineLine make_line(int lf, int ls, int lj, int uf, int us, int uj, double offset_mhz,
                        double c1_khz_per_g, double c2_khz_per_g2, Polarization pol,
                        double weight, bool targeted) {
    HyperfineLine line;
    line.lower = make_state(0, 0, lf, ls, lj);
    line.upper = make_state(0, 1, uf, us, uj);
    line.zero_field_offset_hz = offset_mhz * kMHz;
    line.zeeman_c1_hz_per_g = c1_khz_per_g * kkHz;
    line.zeeman_c2_hz_per_g2 = c2_khz_per_g2 * kkHz;
    line.polarization = pol;
    line.weight = weight;
    line.targeted = targeted;
    return line;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

double parse_number(const std::string& tok, const std::string& origin, int lineno) {
    try {
        std::size_t used = 0;
        double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad number '" + tok + "'");
    }
}

// FSJ token "F,S,J" with optional trailing ",Jz"
void parse_fsj(const std::string& tok, const std::string& origin, int lineno, int& f, int& s,
               int& j, std::optional<int>& jz) {
    std::vector<int> parts;
    std::stringstream ss(tok);
    std::string piece;
    while (std::getline(ss, piece, ',')) {
        piece = trim(piece);
        if (piece.empty()) break;
        parts.push_back(static_cast<int>(parse_number(piece, origin, lineno)));
    }
    if (parts.size() != 3 && parts.size() != 4)
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad FSJ token '" + tok + "'");
    f = parts[0];
    s = parts[1];
    j = parts[2];
    jz = parts.size() == 4 ? std::optional<int>(parts[3]) : std::nullopt;
}

} // namespace

std::array<HyperfineState, 4> ground_hyperfine_states() {
    return {make_state(0, 0, 1, 0, 0), make_state(0, 0, 0, 1, 1), make_state(0, 0, 1, 1, 1),
            make_state(0, 0, 1, 2, 2)};
}

std::array<HyperfineState, 10> excited_hyperfine_states() {
    return {make_state(0, 1, 0, 1, 0), make_state(0, 1, 0, 1, 1), make_state(0, 1, 0, 1, 2),
            make_state(0, 1, 1, 0, 1), make_state(0, 1, 1, 1, 0), make_state(0, 1, 1, 1, 1),
            make_state(0, 1, 1, 1, 2), make_state(0, 1, 1, 2, 1), make_state(0, 1, 1, 2, 2),
            make_state(0, 1, 1, 2, 3)};
}

std::vector<FrequencyList> builtin_lists() {
    std::vector<FrequencyList> lists;
    for (const ListRow& row : table_rows()) {
        FrequencyList fl;
        fl.name = row.name;
        for (double mhz : row.entries_mhz) fl.entries_hz.push_back(mhz * kMHz);
        fl.total_duration_s = fl.pass_duration();
        lists.push_back(std::move(fl));
    }
    return lists;
}

Catalog builtin_catalog() {
    Catalog cat;
    cat.reference_frequency_hz = kReferenceFrequencyHz;

    auto add = [&cat](HyperfineLine l) { cat.lines.push_back(std::move(l)); };

    // The four simultaneously driven pi components, Jz=0 -> Jz'=0. Offsets are
    // the list A values; the (1,1,1)->(1,1,0) component is referenced to its
    // zero-field position and carries the 78 kHz/G^2 quadratic coefficient so
    // that 1 G reproduces -6.539 MHz. The quadratic coefficients of the other
    // three are below the |6.2| kHz/G^2 bound and are set to zero in the
    // bundled data.
    auto tag_jz0 = [](HyperfineLine l) {
        l.lower_jz = 0;
        l.upper_jz = 0;
        return l;
    };
    add(tag_jz0(make_line(1, 2, 2, 1, 2, 3, -33.211, 0.0, 0.0, Polarization::Pi, 1.0, true)));
    add(tag_jz0(make_line(1, 1, 1, 1, 1, 0, -6.617, 0.0, 78.0, Polarization::Pi, 1.0, true)));
    add(tag_jz0(make_line(1, 0, 0, 1, 0, 1, -9.069, 0.0, 0.0, Polarization::Pi, 1.0, true)));
    add(tag_jz0(make_line(0, 1, 1, 0, 1, 2, -2.138, 0.0, 0.0, Polarization::Pi, 1.0, true)));

    // Fifth low-shift Jz=0->0 component; lies close to other strong components
    // and is not targeted by any list.
    add(tag_jz0(make_line(1, 1, 1, 1, 1, 2, 11.78, 0.0, 0.0, Polarization::Pi, 1.0, false)));

    // Aggregate Zeeman-manifold components. The substates of each ground
    // hyperfine state are excitable within a band around the list A'
    // frequency that scales linearly with B: half-widths per gauss of
    // 0.5 MHz for (1,2,2), 1.0 MHz for (1,1,1) and 0.22 MHz for (0,1,1);
    // (1,0,0) has a single substate and no band. Each band is represented by
    // six components per side on a uniform c1 grid with weights tapering
    // toward the band edge.
    struct Band {
        int f, s, j;       // lower state
        int uf, us, uj;    // upper state label
        double zero_field_mhz;
        double c2_khz;
        double halfwidth_mhz_per_g;
    };
    const Band bands[] = {
        {1, 2, 2, 1, 2, 3, -33.211, 0.0, 0.50},
        {1, 1, 1, 1, 1, 0, -6.617, 78.0, 1.00},
        {0, 1, 1, 0, 1, 2, -2.138, 0.0, 0.22},
    };
    const double taper[6] = {0.60, 0.50, 0.40, 0.30, 0.15, 0.05};
    for (const Band& b : bands) {
        for (int k = 1; k <= 6; ++k) {
            const double c1_khz = 1000.0 * b.halfwidth_mhz_per_g * k / 6.0;
            for (int sign : {-1, +1}) {
                add(make_line(b.f, b.s, b.j, b.uf, b.us, b.uj, b.zero_field_mhz, sign * c1_khz,
                              b.c2_khz, Polarization::Sigma, taper[k - 1], false));
            }
        }
    }

    cat.lists = builtin_lists();
    validate_catalog(cat);
    return cat;
}

const FrequencyList* Catalog::find_list(const std::string& name) const {
    const std::string canon = normalize_list_name(name);
    for (const FrequencyList& fl : lists)
        if (fl.name == canon) return &fl;
    return nullptr;
}

const FrequencyList& Catalog::list(const std::string& name) const {
    const FrequencyList* fl = find_list(name);
    if (!fl) throw ConfigError("unknown frequency list '" + name + "'");
    return *fl;
}

std::vector<const HyperfineLine*> Catalog::targeted() const {
    std::vector<const HyperfineLine*> out;
    for (const HyperfineLine& l : lines)
        if (l.targeted) out.push_back(&l);
    return out;
}

std::string normalize_list_name(const std::string& name) {
    std::string s = trim(name);
    std::string lower;
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "aprime" || lower == "a'") return "A'";
    if (lower == "500" || lower == "detuned500" || lower == "500mhz") return "detuned500";
    if (s.size() == 1 && std::isalpha(static_cast<unsigned char>(s[0])))
        return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(s[0]))));
    return s;
}

void validate_catalog(const Catalog& catalog) {
    if (!(catalog.reference_frequency_hz > 0))
        throw ConfigError("catalog: reference frequency must be positive");

    for (const HyperfineLine& l : catalog.lines) {
        if (l.lower.level.v != 0 || l.lower.level.n != 0 || l.upper.level.v != 0 ||
            l.upper.level.n != 1)
            throw ConfigError("catalog: lines must connect (v=0,N=0) to (v'=0,N'=1)");
        for (const HyperfineState* st : {&l.lower, &l.upper}) {
            if (st->j < 0 || st->f < 0 || st->f > 1 || st->s < 0 || st->s > 2)
                throw ConfigError("catalog: implausible (F,S,J) quantum numbers");
        }
        if (!std::isfinite(l.zero_field_offset_hz) || !std::isfinite(l.zeeman_c1_hz_per_g) ||
            !std::isfinite(l.zeeman_c2_hz_per_g2) || !std::isfinite(l.weight))
            throw ConfigError("catalog: non-finite line parameter");
        if (!(l.weight >= 0)) throw ConfigError("catalog: negative line weight");
        // Jz=0 -> Jz'=0 components have no linear shift; all except the
        // (1,1,1)->(1,1,0) component stay within 6.2 kHz at 1 G.
        if (l.lower_jz == 0 && l.upper_jz == 0) {
            if (l.zeeman_c1_hz_per_g != 0.0)
                throw ConfigError("catalog: Jz=0->0 line with nonzero linear Zeeman coefficient");
            const bool big_quadratic = l.lower.same_fsj(1, 1, 1) && l.upper.same_fsj(1, 1, 0);
            if (!big_quadratic && std::abs(l.zeeman_c2_hz_per_g2) > 6.2e3)
                throw ConfigError("catalog: quadratic Zeeman coefficient exceeds 6.2 kHz/G^2 bound");
        }
    }

    // Ground-state degeneracy bookkeeping must match the 12 magnetic substates.
    int deg = 0;
    for (const HyperfineState& st : ground_hyperfine_states()) deg += st.degeneracy();
    if (deg != 12) throw ConfigError("catalog: ground hyperfine degeneracies do not sum to 12");

    for (const FrequencyList& fl : catalog.lists) {
        if (fl.entries_hz.empty()) throw ConfigError("catalog: empty frequency list " + fl.name);
        for (double e : fl.entries_hz)
            if (!std::isfinite(e)) throw ConfigError("catalog: non-finite entry in list " + fl.name);
        if (!(fl.dwell_s > 0) || fl.fm_amplitude_hz < 0 || fl.fm_rate_hz < 0)
            throw ConfigError("catalog: bad dwell/FM parameters in list " + fl.name);
        const std::string& n = fl.name;
        if (n == "A" || n == "B" || n == "C" || n == "D" || n == "E") {
            if (fl.entries_hz.size() != 4)
                throw ConfigError("catalog: list " + n + " must have exactly 4 entries");
            for (double e : fl.entries_hz)
                if (std::abs(e) > 40.0 * kMHz)
                    throw ConfigError("catalog: list " + n + " entry outside +-40 MHz");
        } else if (n == "A'") {
            if (fl.entries_hz.size() != 7)
                throw ConfigError("catalog: list A' must have exactly 7 entries");
            for (double e : fl.entries_hz)
                if (std::abs(e) > 40.0 * kMHz)
                    throw ConfigError("catalog: list A' entry outside +-40 MHz");
        } else if (n == "detuned500") {
            if (fl.entries_hz.size() != 1 || fl.entries_hz[0] != 500.0 * kMHz)
                throw ConfigError("catalog: list detuned500 must hold the single entry +500 MHz");
        }
    }
}

Catalog parse_catalog(std::istream& in, const std::string& origin) {
    Catalog cat;
    cat.reference_frequency_hz = kReferenceFrequencyHz;

    enum class Section { None, Meta, Lines, List };
    Section section = Section::None;
    FrequencyList* current_list = nullptr;

    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name == "meta") {
                section = Section::Meta;
            } else if (name == "lines") {
                section = Section::Lines;
            } else if (name.rfind("list.", 0) == 0) {
                section = Section::List;
                cat.lists.emplace_back();
                current_list = &cat.lists.back();
                current_list->name = normalize_list_name(name.substr(5));
                if (current_list->name.empty())
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unnamed list");
            } else {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown section [" +
                                  name + "]");
            }
            continue;
        }

        if (section == Section::Meta || section == Section::List) {
            const std::size_t eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (section == Section::Meta) {
                if (key == "reference_frequency_MHz")
                    cat.reference_frequency_hz = parse_number(value, origin, lineno) * kMHz;
                else
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown meta key '" +
                                      key + "'");
            } else {
                if (key == "entries_MHz") {
                    std::stringstream ss(value);
                    std::string tok;
                    while (std::getline(ss, tok, ',')) {
                        tok = trim(tok);
                        if (tok.empty()) continue;
                        current_list->entries_hz.push_back(parse_number(tok, origin, lineno) * kMHz);
                    }
                } else if (key == "dwell_s") {
                    current_list->dwell_s = parse_number(value, origin, lineno);
                } else if (key == "fm_amplitude_kHz") {
                    current_list->fm_amplitude_hz = parse_number(value, origin, lineno) * kkHz;
                } else if (key == "fm_rate_Hz") {
                    current_list->fm_rate_hz = parse_number(value, origin, lineno);
                } else if (key == "total_duration_s") {
                    current_list->total_duration_s = parse_number(value, origin, lineno);
                } else {
                    throw ConfigError(origin + ":" + std::to_string(lineno) + ": unknown list key '" +
                                      key + "'");
                }
            }
            continue;
        }

        if (section == Section::Lines) {
            std::stringstream ss(line);
            std::vector<std::string> cols;
            std::string tok;
            while (ss >> tok) cols.push_back(tok);
            if (cols.size() != 8)
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": expected 8 columns in [lines] row");
            HyperfineLine l;
            int f, s, j;
            std::optional<int> jz;
            parse_fsj(cols[0], origin, lineno, f, s, j, jz);
            l.lower = make_state(0, 0, f, s, j);
            l.lower_jz = jz;
            parse_fsj(cols[1], origin, lineno, f, s, j, jz);
            l.upper = make_state(0, 1, f, s, j);
            l.upper_jz = jz;
            l.zero_field_offset_hz = parse_number(cols[2], origin, lineno) * kMHz;
            l.zeeman_c1_hz_per_g = parse_number(cols[3], origin, lineno) * kkHz;
            l.zeeman_c2_hz_per_g2 = parse_number(cols[4], origin, lineno) * kkHz;
            if (cols[5] == "pi")
                l.polarization = Polarization::Pi;
            else if (cols[5] == "sigma")
                l.polarization = Polarization::Sigma;
            else
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": polarization must be pi or sigma");
            l.weight = parse_number(cols[6], origin, lineno);
            if (cols[7] == "yes")
                l.targeted = true;
            else if (cols[7] == "no")
                l.targeted = false;
            else
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": targeted flag must be yes or no");
            cat.lines.push_back(std::move(l));
            continue;
        }

        throw ConfigError(origin + ":" + std::to_string(lineno) + ": content outside any section");
    }

    for (FrequencyList& fl : cat.lists)
        if (fl.total_duration_s <= 0) fl.total_duration_s = fl.pass_duration();

    validate_catalog(cat);
    return cat;
}

Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open catalog file '" + path + "'");
    return parse_catalog(in, path);
}

void write_catalog(const Catalog& catalog, std::ostream& out) {
    out << "# Rotational transition catalog: hyperfine components and excitation lists.\n";
    out << "# Frequencies are offsets from the reference frequency, in MHz.\n";
    out << "[meta]\n";
    out << "reference_frequency_MHz = " << format_scaled(catalog.reference_frequency_hz, kMHz) << "\n\n";

    out << "[lines]\n";
    out << "# lower_FSJ[,Jz] upper_FSJ[,Jz] offset_MHz c1_kHz_per_G c2_kHz_per_G2 pol weight targeted\n";
    for (const HyperfineLine& l : catalog.lines) {
        auto fsj = [](const HyperfineState& st, const std::optional<int>& jz) {
            std::string s = std::to_string(st.f) + "," + std::to_string(st.s) + "," +
                            std::to_string(st.j);
            if (jz) s += "," + std::to_string(*jz);
            return s;
        };
        out << fsj(l.lower, l.lower_jz) << "  " << fsj(l.upper, l.upper_jz) << "  "
            << format_scaled(l.zero_field_offset_hz, kMHz) << "  " << format_scaled(l.zeeman_c1_hz_per_g, kkHz)
            << "  " << format_scaled(l.zeeman_c2_hz_per_g2, kkHz) << "  "
            << (l.polarization == Polarization::Pi ? "pi" : "sigma") << "  " << format_double(l.weight)
            << "  " << (l.targeted ? "yes" : "no") << "\n";
    }

    for (const FrequencyList& fl : catalog.lists) {
        out << "\n[list." << fl.name << "]\n";
        out << "entries_MHz = ";
        for (std::size_t i = 0; i < fl.entries_hz.size(); ++i) {
            if (i) out << ", ";
            out << format_scaled(fl.entries_hz[i], kMHz);
        }
        out << "\n";
        out << "dwell_s = " << format_double(fl.dwell_s) << "\n";
        out << "fm_amplitude_kHz = " << format_scaled(fl.fm_amplitude_hz, kkHz) << "\n";
        out << "fm_rate_Hz = " << format_double(fl.fm_rate_hz) << "\n";
        out << "total_duration_s = " << format_double(fl.total_duration_s) << "\n";
    }
}

void save_catalog(const Catalog& catalog, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write catalog file '" + path + "'");
    write_catalog(catalog, out);
}

std::vector<TargetedPair> targeted_lines(const Catalog& catalog, const FrequencyList& list,
                                         double b_gauss, double tolerance_hz) {
    if (!(tolerance_hz > 0)) throw ConfigError("targeted_lines: tolerance must be positive");
    std::vector<TargetedPair> pairs;
    for (std::size_t i = 0; i < list.entries_hz.size(); ++i) {
        for (const HyperfineLine& l : catalog.lines) {
            const double pos = l.zero_field_offset_hz + l.zeeman_c1_hz_per_g * b_gauss +
                               l.zeeman_c2_hz_per_g2 * b_gauss * b_gauss;
            if (std::abs(pos - list.entries_hz[i]) <= tolerance_hz)
                pairs.push_back({i, list.entries_hz[i], &l, pos});
        }
    }
    return pairs;
}

} // namespace rotsim
