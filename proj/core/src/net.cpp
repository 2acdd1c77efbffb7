#include "pff/net.hpp"

#include <sstream>

namespace pff {

namespace {

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    std::istringstream is(s);
    std::string item;
    while (std::getline(is, item, ','))
        if (!item.empty()) out.push_back(std::stoi(item));
    return out;
}

}  // namespace

void NetConfig::validate() const {
    if (identity_stub) return;
    if (k < 1 || k % 2 == 0) throw FormatError("NetConfig: k must be odd and positive");
    if (in_channels != 1 && in_channels != 3)
        throw FormatError("NetConfig: in_channels must be 1 or 3");
    if (pool_after.size() != upsample_after.size())
        throw FormatError("NetConfig: pooling and upsampling schedules must pair up");
    if (deep_layers < 1 || shallow_layers < 1)
        throw FormatError("NetConfig: both streams need at least one layer");
    int prev = -1;
    for (int i : pool_after) {
        if (i < 0 || i >= deep_layers || i <= prev)
            throw FormatError("NetConfig: pool_after must be increasing layer indices");
        prev = i;
    }
    prev = -1;
    for (int i : upsample_after) {
        if (i < 0 || i >= deep_layers || i <= prev)
            throw FormatError("NetConfig: upsample_after must be increasing layer indices");
        prev = i;
    }
}

std::string NetConfig::to_kv() const {
    std::ostringstream os;
    os << "in_channels=" << in_channels << "\n"
       << "k=" << k << "\n"
       << "head=" << (head == HeadMode::filter_flow ? "filter-flow" : "direct-image") << "\n"
       << "constraint=" << (flow_constraint == FlowConstraint::simplex ? "simplex" : "free") << "\n"
       << "deep_layers=" << deep_layers << "\n"
       << "deep_channels=" << deep_channels << "\n"
       << "pool_after=" << join_ints(pool_after) << "\n"
       << "upsample_after=" << join_ints(upsample_after) << "\n"
       << "shallow_layers=" << shallow_layers << "\n"
       << "shallow_channels=" << shallow_channels << "\n"
       << "fusion_layers=" << fusion_layers << "\n"
       << "bn_momentum=" << bn_momentum << "\n"
       << "bn_epsilon=" << bn_epsilon << "\n"
       << "head_init_scale=" << head_init_scale << "\n"
       << "head_identity_weight=" << head_identity_weight << "\n"
       << "init_seed=" << init_seed << "\n"
       << "identity_stub=" << (identity_stub ? 1 : 0) << "\n";
    return os.str();
}

NetConfig NetConfig::from_kv(const std::string& text) {
    NetConfig c;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("NetConfig: bad line '" + line + "'");
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "in_channels") c.in_channels = std::stoi(val);
        else if (key == "k") c.k = std::stoi(val);
        else if (key == "head") {
            if (val == "filter-flow") c.head = HeadMode::filter_flow;
            else if (val == "direct-image") c.head = HeadMode::direct_image;
            else throw FormatError("NetConfig: unknown head mode '" + val + "'");
        }
        else if (key == "constraint") {
            if (val == "simplex") c.flow_constraint = FlowConstraint::simplex;
            else if (val == "free") c.flow_constraint = FlowConstraint::free;
            else throw FormatError("NetConfig: unknown constraint '" + val + "'");
        }
        else if (key == "deep_layers") c.deep_layers = std::stoi(val);
        else if (key == "deep_channels") c.deep_channels = std::stoi(val);
        else if (key == "pool_after") c.pool_after = split_ints(val);
        else if (key == "upsample_after") c.upsample_after = split_ints(val);
        else if (key == "shallow_layers") c.shallow_layers = std::stoi(val);
        else if (key == "shallow_channels") c.shallow_channels = std::stoi(val);
        else if (key == "fusion_layers") c.fusion_layers = std::stoi(val);
        else if (key == "bn_momentum") c.bn_momentum = std::stof(val);
        else if (key == "bn_epsilon") c.bn_epsilon = std::stof(val);
        else if (key == "head_init_scale") c.head_init_scale = std::stof(val);
        else if (key == "head_identity_weight") c.head_identity_weight = std::stof(val);
        else if (key == "init_seed") c.init_seed = std::stoull(val);
        else if (key == "identity_stub") c.identity_stub = std::stoi(val) != 0;
        else throw FormatError("NetConfig: unknown key '" + key + "'");
    }
    c.validate();
    return c;
}

}  // namespace pff
