// chorus command-line entry point. Subcommands are wired in as the
// corresponding modules land; see README for usage.

#include <cstdio>

int main() {
    std::fprintf(stderr, "chorus: CLI not assembled yet\n");
    return 2;
}
