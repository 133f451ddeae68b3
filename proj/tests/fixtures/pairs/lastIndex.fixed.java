class Cursor {
    public int lastIndex(int[] xs) {
        int i = 0;
        while (i < xs.length) {
            i++;
        }
        return i - 1;
    }
}
