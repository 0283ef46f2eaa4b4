#include "veilqa/kg_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace veilqa {

namespace {

constexpr const char* kNameRelation = "type.object.name";
constexpr const char* kFreebaseNs = "http://rdf.freebase.com/ns/";

std::vector<std::string> sorted_unique(std::vector<std::string> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

bool matches_cvt_prefix(const Relation& r, const std::vector<std::string>& prefixes) {
    if (is_flattened(r)) return false;  // never re-flag a flattened relation
    for (const auto& p : prefixes) {
        if (!p.empty() && r.compare(0, p.size(), p) == 0) return true;
    }
    return false;
}

}  // namespace

// ---------------------------------------------------------------------------
// In-memory backend

std::vector<Relation> InMemoryGraph::adjacent_relations(const Mid& e, Direction d) const {
    std::vector<Relation> out;
    const auto& index = d == Direction::AsSubject ? by_head_ : by_tail_;
    auto it = index.find(e);
    if (it != index.end()) {
        out.reserve(it->second.size());
        for (auto idx : it->second) out.push_back(triples_[idx].relation);
    }
    return sorted_unique(std::move(out));
}

std::vector<Mid> InMemoryGraph::entity_cluster(const Mid& e, const Relation& r,
                                               Direction d) const {
    std::vector<Mid> out;
    const auto& index = d == Direction::AsSubject ? by_head_ : by_tail_;
    auto it = index.find(e);
    if (it != index.end()) {
        for (auto idx : it->second) {
            const Triplet& t = triples_[idx];
            if (t.relation != r) continue;
            out.push_back(d == Direction::AsSubject ? t.tail : t.head);
        }
    }
    if (is_flattened(r)) {
        // Two-hop form traversing a mediator, mirroring the two fixed
        // two-template orientations.
        auto [r1, r2] = split_flattened(r);
        if (d == Direction::AsSubject) {
            for (const auto& mid : entity_cluster(e, r1, Direction::AsSubject)) {
                for (const auto& b : entity_cluster(mid, r2, Direction::AsSubject)) {
                    out.push_back(b);
                }
            }
        } else {
            for (const auto& mid : entity_cluster(e, r2, Direction::AsObject)) {
                for (const auto& a : entity_cluster(mid, r1, Direction::AsObject)) {
                    out.push_back(a);
                }
            }
        }
    }
    return sorted_unique(std::move(out));
}

std::optional<std::string> InMemoryGraph::lookup_name(const Mid& e) const {
    auto it = names_.find(e);
    if (it == names_.end()) return std::nullopt;
    return it->second;
}

// ---------------------------------------------------------------------------
// Loading

namespace {

void parse_triple_line(const std::string& raw, std::size_t line_no,
                       std::vector<Triplet>& triples, std::map<Mid, std::string>& names) {
    std::string line = raw;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') return;

    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
        throw GraphError("malformed triple at line " + std::to_string(line_no) +
                         ": expected head\\trelation\\ttail");
    }
    std::string head = line.substr(0, t1);
    std::string rel = line.substr(t1 + 1, t2 - t1 - 1);
    std::string tail = line.substr(t2 + 1);
    if (head.empty() || rel.empty() || tail.empty()) {
        throw GraphError("malformed triple at line " + std::to_string(line_no) +
                         ": empty field");
    }
    if (rel == kNameRelation) {
        // Name rows feed the privacy-gated name store, never the indexes.
        names.emplace(head, tail);
        return;
    }
    triples.push_back(Triplet{std::move(head), std::move(rel), std::move(tail)});
}

void load_names_sidecar(const std::string& path, std::map<Mid, std::string>& names) {
    std::ifstream in(path);
    if (!in) throw GraphError("unreadable names file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            throw GraphError("malformed name at line " + std::to_string(line_no) +
                             " of " + path);
        }
        names.emplace(line.substr(0, tab), line.substr(tab + 1));
    }
}

void index_triples_impl(InMemoryGraph& g, std::vector<Triplet> triples,
                        std::map<Mid, std::string> names,
                        std::vector<std::string> cvt_prefixes) {
    std::sort(triples.begin(), triples.end());
    triples.erase(std::unique(triples.begin(), triples.end()), triples.end());
    g.triples_ = std::move(triples);
    g.names_ = std::move(names);
    g.cvt_prefixes_ = std::move(cvt_prefixes);
    for (std::size_t i = 0; i < g.triples_.size(); ++i) {
        g.by_head_[g.triples_[i].head].push_back(i);
        g.by_tail_[g.triples_[i].tail].push_back(i);
    }
}

}  // namespace

GraphHandle load_graph(const GraphSource& source) {
    if (!source.endpoint_url.empty()) {
        return std::make_shared<RemoteGraph>(source.endpoint_url,
                                             source.cvt_relation_prefixes);
    }
    std::ifstream in(source.triples_path);
    if (!in) throw GraphError("unreadable graph file: " + source.triples_path);

    std::vector<Triplet> triples;
    std::map<Mid, std::string> names;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        parse_triple_line(line, ++line_no, triples, names);
    }
    if (triples.empty()) throw GraphError("empty graph: " + source.triples_path);
    if (!source.names_path.empty()) load_names_sidecar(source.names_path, names);

    auto g = std::make_shared<InMemoryGraph>();
    index_triples_impl(*g, std::move(triples), std::move(names),
                       source.cvt_relation_prefixes);
    return g;
}

InMemoryGraph make_graph_for_tests(std::vector<Triplet> triples,
                                   std::map<Mid, std::string> names,
                                   std::vector<std::string> cvt_prefixes) {
    InMemoryGraph g;
    index_triples_impl(g, std::move(triples), std::move(names), std::move(cvt_prefixes));
    return g;
}

// ---------------------------------------------------------------------------
// CVT flattening

GraphHandle flatten_cvt(const GraphHandle& g) {
    auto mem = std::dynamic_pointer_cast<const InMemoryGraph>(g);
    if (!mem) {
        throw GraphError("flatten_cvt requires a file-backed graph; remote "
                         "backends flatten per query");
    }
    const auto& prefixes = mem->cvt_relation_prefixes();
    if (prefixes.empty()) return g;  // identity

    // A CVT node is the tail of any CVT-mediating single-hop relation.
    std::set<Mid> cvt_nodes;
    for (const auto& t : mem->triples()) {
        if (matches_cvt_prefix(t.relation, prefixes)) cvt_nodes.insert(t.tail);
    }
    if (cvt_nodes.empty()) return g;

    std::vector<Triplet> out;
    out.reserve(mem->triples().size());
    for (const auto& t : mem->triples()) {
        if (cvt_nodes.count(t.head) || cvt_nodes.count(t.tail)) continue;
        out.push_back(t);
    }
    for (const auto& t : mem->triples()) {
        if (!matches_cvt_prefix(t.relation, prefixes) || !cvt_nodes.count(t.tail)) continue;
        for (const auto& r2 : mem->adjacent_relations(t.tail, Direction::AsSubject)) {
            for (const auto& b : mem->entity_cluster(t.tail, r2, Direction::AsSubject)) {
                if (cvt_nodes.count(b)) continue;  // nested mediators are dropped
                out.push_back(Triplet{t.head, t.relation + kFlattenSeparator + r2, b});
            }
        }
    }

    auto flattened = std::make_shared<InMemoryGraph>();
    std::map<Mid, std::string> names = mem->names_;
    index_triples_impl(*flattened, std::move(out), std::move(names),
                       std::vector<std::string>(prefixes));
    return flattened;
}

// ---------------------------------------------------------------------------
// SPARQL templates (fixed; remote queries are these with slots filled)

const SparqlTemplates& sparql_templates() {
    static const SparqlTemplates t{
        // relations_head
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?relation\n"
        "WHERE {\n"
        "ns:{mid} ?relation ?x .\n"
        "}",
        // relations_tail
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?relation\n"
        "WHERE {\n"
        "?x ?relation ns:{mid} .\n"
        "}",
        // cluster_head
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "ns:{mid} ns:{r} ?tailEntity .\n"
        "}",
        // cluster_tail
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "?tailEntity ns:{r} ns:{mid} .\n"
        "}",
        // cluster_head_2hop
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "ns:{mid} ns:{r1} ?mid_entity .\n"
        "?mid_entity ns:{r2} ?tailEntity .\n"
        "}",
        // cluster_tail_2hop
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT ?tailEntity\n"
        "WHERE {\n"
        "?tailEntity ns:{r1} ?mid_entity .\n"
        "?mid_entity ns:{r2} ns:{mid} .\n"
        "}",
        // entity_name
        "PREFIX ns: <http://rdf.freebase.com/ns/>\n"
        "SELECT DISTINCT ?tailEntity\n"
        "WHERE {\n"
        "FILTER (!isLiteral(?tailEntity) OR lang(?tailEntity) = '' OR "
        "langMatches(lang(?tailEntity), 'en'))\n"
        "{\n"
        "?entity ns:type.object.name ?tailEntity . FILTER(?entity = ns:{mid})\n"
        "}\n"
        "}",
    };
    return t;
}

std::string render_sparql(const std::string& tmpl, const Mid& mid, const Relation& r1,
                          const Relation& r2) {
    std::string out = tmpl;
    auto fill = [&out](const std::string& slot, const std::string& value) {
        for (auto pos = out.find(slot); pos != std::string::npos; pos = out.find(slot, pos)) {
            out.replace(pos, slot.size(), value);
            pos += value.size();
        }
    };
    fill("{mid}", mid);
    fill("{r1}", r1);
    fill("{r2}", r2);
    fill("{r}", r1);
    return out;
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteGraph::RemoteGraph(std::string endpoint_url, std::vector<std::string> cvt_prefixes) {
    cvt_prefixes_ = std::move(cvt_prefixes);
    // Split scheme://host[:port]/path
    auto scheme_end = endpoint_url.find("://");
    std::string rest = scheme_end == std::string::npos ? endpoint_url
                                                       : endpoint_url.substr(scheme_end + 3);
    auto slash = rest.find('/');
    std::string prefix = scheme_end == std::string::npos ? "http://"
                                                         : endpoint_url.substr(0, scheme_end + 3);
    host_ = prefix + (slash == std::string::npos ? rest : rest.substr(0, slash));
    path_ = slash == std::string::npos ? "/sparql" : rest.substr(slash);
}

std::vector<std::string> RemoteGraph::query(const std::string& sparql) const {
    httplib::Client client(host_);
    client.set_read_timeout(30, 0);
    httplib::Params params{{"query", sparql}, {"format", "json"}};
    auto res = client.Get(path_, params, httplib::Headers{
                                             {"Accept", "application/sparql-results+json"}});
    if (!res || res->status != 200) {
        throw GraphError("SPARQL endpoint unreachable: " + host_ + path_ +
                         (res ? " (status " + std::to_string(res->status) + ")" : ""));
    }
    std::vector<std::string> values;
    auto body = nlohmann::json::parse(res->body, nullptr, false);
    if (body.is_discarded()) throw GraphError("invalid SPARQL JSON from " + host_);
    for (const auto& binding : body["results"]["bindings"]) {
        for (const auto& [var, cell] : binding.items()) {
            std::string v = cell.value("value", "");
            if (v.rfind(kFreebaseNs, 0) == 0) v = v.substr(std::string(kFreebaseNs).size());
            values.push_back(std::move(v));
        }
    }
    return sorted_unique(std::move(values));
}

std::vector<Relation> RemoteGraph::adjacent_relations(const Mid& e, Direction d) const {
    const auto& t = sparql_templates();
    auto raw = query(render_sparql(
        d == Direction::AsSubject ? t.relations_head : t.relations_tail, e));

    // Compose flattened relations across mediator nodes so that callers see
    // "r1|r2" instead of a dangling CVT hop.
    std::vector<Relation> out;
    for (const auto& r : raw) {
        if (d == Direction::AsSubject && matches_cvt_prefix(r, cvt_prefixes_)) {
            for (const auto& mid : query(render_sparql(t.cluster_head, e, r))) {
                for (const auto& r2 : query(render_sparql(t.relations_head, mid))) {
                    out.push_back(r + kFlattenSeparator + r2);
                }
            }
        } else if (d == Direction::AsObject) {
            // (a, r1, cvt)(cvt, r, e): the incoming hop is flattened when some
            // relation into the mediator is CVT-mediating.
            bool composed = false;
            for (const auto& mid : query(render_sparql(t.cluster_tail, e, r))) {
                for (const auto& r1 : query(render_sparql(t.relations_tail, mid))) {
                    if (!matches_cvt_prefix(r1, cvt_prefixes_)) continue;
                    out.push_back(r1 + kFlattenSeparator + r);
                    composed = true;
                }
            }
            if (!composed) out.push_back(r);
        } else {
            out.push_back(r);
        }
    }
    return sorted_unique(std::move(out));
}

std::vector<Mid> RemoteGraph::entity_cluster(const Mid& e, const Relation& r,
                                             Direction d) const {
    const auto& t = sparql_templates();
    if (is_flattened(r)) {
        auto [r1, r2] = split_flattened(r);
        return query(render_sparql(
            d == Direction::AsSubject ? t.cluster_head_2hop : t.cluster_tail_2hop, e, r1, r2));
    }
    return query(render_sparql(d == Direction::AsSubject ? t.cluster_head : t.cluster_tail,
                               e, r));
}

std::optional<std::string> RemoteGraph::lookup_name(const Mid& e) const {
    auto values = query(render_sparql(sparql_templates().entity_name, e));
    if (values.empty()) return std::nullopt;
    return values.front();
}

}  // namespace veilqa
