public static String head(String text, int limit) {
    if (text.length() < limit) {
        return text;
    }
    return text.substring(0, limit);
}
