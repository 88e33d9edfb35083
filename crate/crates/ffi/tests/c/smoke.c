#include <stdio.h>
#include <string.h>
#include "traintrack.h"

static char *slurp(const char *path) {
    FILE *f = fopen(path, "rb");
    if (!f) return NULL;
    fseek(f, 0, SEEK_END);
    long n = ftell(f);
    rewind(f);
    char *buf = malloc(n + 1);
    fread(buf, 1, n, f);
    buf[n] = 0;
    fclose(f);
    return buf;
}

int main(int argc, char **argv) {
    if (argc < 2) return 64;
    char *json = slurp(argv[1]);
    if (!json) return 65;
    TtGraph *g = NULL;
    if (tt_graph_from_json(json, &g) != TT_STATUS_OK) return 1;
    int64_t geom = 0, gl = 0;
    tt_graph_tree_index(g, &geom, &gl);
    TtTrack *t = NULL;
    tt_track_discrete(g, &t);
    size_t h = 0;
    int64_t tg = 0;
    tt_track_index(t, &h, &tg);
    TtStatus adm = tt_track_is_admissible(t);
    size_t ranks[] = {2};
    size_t height = 0;
    tt_height(ranks, 1, 2, &height);
    TtStatus bad = tt_graph_from_json("{\"ambient_rank\": 2", &g);
    printf("tree %lld %lld track %zu %lld admissible %d height %zu bad %d %s\n",
           (long long)geom, (long long)gl, h, (long long)tg, (int)adm, height, (int)bad,
           strlen(tt_last_error()) > 0 ? "msg" : "nomsg");
    tt_track_free(t);
    tt_graph_free(g);
    free(json);
    return 0;
}
