#include <cstdio>
int main(){ std::puts("tilted-boot"); return 0; }
