#include <cstdio>
int main() { std::puts("robsur"); return 0; }
